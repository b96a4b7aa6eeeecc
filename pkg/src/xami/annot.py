"""Annotation data model: masks in three encodings, COCO-style IO, stats.

Mask conventions (also in docs/formats.md):
  * Polygon — >=3 (x, y) float vertices, pixel coordinates, origin top-left.
  * RLE — column-major run counts over an (h, w) canvas, alternating
    zero-runs and one-runs, starting with a (possibly zero-length)
    zero-run; counts must sum to h*w. Uncompressed integer counts only.
  * Bitmap — (h, w) boolean array.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .imgproc import FilterBand, filter_band


class ArtefactClass(IntEnum):
    """The five artefact categories, with stable ids 0-4."""

    CR = 0  # central ring
    SR = 1  # smoke ring
    SL = 2  # star loop
    ROS = 3  # read-out streak
    OTHER = 4


CLASS_ORDER = tuple(ArtefactClass)

CLASS_LONG_NAMES = {
    ArtefactClass.CR: "central ring",
    ArtefactClass.SR: "smoke ring",
    ArtefactClass.SL: "star loop",
    ArtefactClass.ROS: "read-out streak",
    ArtefactClass.OTHER: "other",
}

_CLASS_ALIASES: dict[str, ArtefactClass] = {}
for _cls in CLASS_ORDER:
    _CLASS_ALIASES[_cls.name.lower()] = _cls
    long = CLASS_LONG_NAMES[_cls]
    for variant in (long, long + "s", long.replace("-", " "), long.replace("-", "")):
        _CLASS_ALIASES[variant.lower().replace("_", " ")] = _cls
_CLASS_ALIASES["read out streak"] = ArtefactClass.ROS
_CLASS_ALIASES["read out streaks"] = ArtefactClass.ROS
_CLASS_ALIASES["readout streak"] = ArtefactClass.ROS
_CLASS_ALIASES["readout streaks"] = ArtefactClass.ROS
_CLASS_ALIASES["star loops"] = ArtefactClass.SL


def artefact_class(name: str) -> ArtefactClass:
    """Resolve a category name (short code or long form) to its class."""
    key = name.strip().lower().replace("_", " ").replace("-", " ")
    key = " ".join(key.split())
    cls = _CLASS_ALIASES.get(key)
    if cls is None:
        cls = _CLASS_ALIASES.get(key.replace(" ", ""))
    if cls is None:
        raise CocoFormatError(f"unknown category name {name!r}")
    return cls


class CocoFormatError(ValueError):
    """Structural problem in an annotation or results file."""


@dataclass(frozen=True)
class PolygonMask:
    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise ValueError(f"polygon needs >= 3 vertices, got {len(self.vertices)}")


@dataclass(frozen=True)
class RleMask:
    size: tuple[int, int]  # (h, w)
    counts: tuple[int, ...]

    def __post_init__(self):
        h, w = self.size
        if h < 1 or w < 1:
            raise ValueError(f"invalid RLE canvas {self.size}")
        if any(c < 0 for c in self.counts):
            raise ValueError("RLE counts must be non-negative")
        total = sum(self.counts)
        if total != h * w:
            raise ValueError(f"RLE counts sum {total} != h*w = {h * w}")


class BitmapMask:
    """Boolean (h, w) pixel mask; equality compares pixels."""

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"bitmap must be 2-D, got shape {arr.shape}")
        self.pixels = arr

    def __eq__(self, other):
        if not isinstance(other, BitmapMask):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __repr__(self):
        return f"BitmapMask(shape={self.pixels.shape}, area={int(self.pixels.sum())})"


InstanceMask = PolygonMask | RleMask | BitmapMask


def mask_canvas(mask: InstanceMask) -> tuple[int, int] | None:
    """(h, w) for encodings that carry one; polygons do not."""
    if isinstance(mask, RleMask):
        return mask.size
    if isinstance(mask, BitmapMask):
        return mask.pixels.shape  # type: ignore[return-value]
    return None


def rle_encode(bitmap: np.ndarray) -> RleMask:
    """Column-major RLE with a leading (possibly empty) zero-run."""
    arr = np.asarray(bitmap, dtype=bool)
    if arr.ndim != 2:
        raise ValueError(f"bitmap must be 2-D, got shape {arr.shape}")
    h, w = arr.shape
    flat = arr.ravel(order="F")
    if flat.size == 0:
        return RleMask((h, w), ())
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts = [0] + counts
    return RleMask((h, w), tuple(int(c) for c in counts))


def rle_decode(rle: RleMask) -> np.ndarray:
    """Expand column-major runs back to an (h, w) boolean bitmap."""
    h, w = rle.size
    values = np.arange(len(rle.counts)) % 2 == 1
    flat = np.repeat(values, np.asarray(rle.counts, dtype=np.int64))
    return flat.reshape((h, w), order="F")


def polygon_window(vertices) -> tuple[int, int, np.ndarray]:
    """Scanline-fill a polygon into its own bounding window.

    Returns (row0, col0, crop): the window origin in canvas coordinates and
    the filled boolean window. Even-odd rule; a pixel is set when its
    center (c+0.5, r+0.5) lies in a half-open [enter, exit) crossing
    interval of its scanline. Edge spans are half-open in y as well, so
    vertex hits and exact-boundary centers stay unambiguous.
    """
    xs = [v[0] for v in vertices]
    ys = [v[1] for v in vertices]
    r_lo = int(math.floor(min(ys)))
    c_lo = int(math.floor(min(xs)))
    height = int(math.ceil(max(ys))) - r_lo + 1
    width = int(math.ceil(max(xs))) - c_lo + 1

    rows_parts: list[np.ndarray] = []
    x_parts: list[np.ndarray] = []
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        if y1 == y2:
            continue
        if y1 < y2:
            ylo, xlo, yhi, xhi = y1, x1, y2, x2
        else:
            ylo, xlo, yhi, xhi = y2, x2, y1, x1
        a = math.ceil(ylo - 0.5)
        b = math.ceil(yhi - 0.5) - 1  # centers with ylo <= r+0.5 < yhi
        if b < a:
            continue
        rows = np.arange(a, b + 1, dtype=np.int64)
        t = (rows + 0.5 - ylo) / (yhi - ylo)
        rows_parts.append(rows)
        x_parts.append(xlo + t * (xhi - xlo))

    crop = np.zeros((height, width), dtype=bool)
    if not rows_parts:
        return r_lo, c_lo, crop
    rows_all = np.concatenate(rows_parts) - r_lo
    x_all = np.concatenate(x_parts)
    order = np.lexsort((x_all, rows_all))
    rows_all = rows_all[order]
    x_all = x_all[order]
    # half-open spans guarantee an even crossing count per scanline
    xa = x_all[0::2]
    xb = x_all[1::2]
    rp = rows_all[0::2]
    c0 = np.floor(xa - 0.5).astype(np.int64) + 1 - c_lo
    c1 = np.ceil(xb - 0.5).astype(np.int64) - 1 - c_lo
    valid = c1 >= c0
    if valid.any():
        marks = np.zeros((height, width + 1), dtype=np.int32)
        np.add.at(marks, (rp[valid], c0[valid]), 1)
        np.add.at(marks, (rp[valid], c1[valid] + 1), -1)
        crop = np.cumsum(marks[:, :-1], axis=1) > 0
    return r_lo, c_lo, crop


def _rasterize_polygon(vertices, h: int, w: int) -> np.ndarray:
    xs = [v[0] for v in vertices]
    ys = [v[1] for v in vertices]
    if min(xs) < -1.0 or max(xs) > w + 1.0 or min(ys) < -1.0 or max(ys) > h + 1.0:
        raise ValueError(
            f"polygon vertices outside canvas {w}x{h} beyond 1 px tolerance"
        )
    r0, c0, crop = polygon_window(vertices)
    out = np.zeros((h, w), dtype=bool)
    rr0 = max(0, r0)
    cc0 = max(0, c0)
    rr1 = min(h, r0 + crop.shape[0])
    cc1 = min(w, c0 + crop.shape[1])
    if rr1 > rr0 and cc1 > cc0:
        out[rr0:rr1, cc0:cc1] = crop[rr0 - r0 : rr1 - r0, cc0 - c0 : cc1 - c0]
    return out


def rasterize(mask: InstanceMask, h: int, w: int) -> np.ndarray:
    """Materialize any encoding as an (h, w) boolean bitmap.

    Polygons are filled by even-odd scanline with a pixel-center
    (x+0.5, y+0.5) inclusion test; RLE expands column-major.
    """
    if isinstance(mask, PolygonMask):
        return _rasterize_polygon(mask.vertices, h, w)
    if isinstance(mask, RleMask):
        if mask.size != (h, w):
            raise ValueError(f"RLE canvas {mask.size} != requested {(h, w)}")
        return rle_decode(mask)
    if isinstance(mask, BitmapMask):
        if mask.pixels.shape != (h, w):
            raise ValueError(
                f"bitmap canvas {mask.pixels.shape} != requested {(h, w)}"
            )
        return mask.pixels.copy()
    raise TypeError(f"not an InstanceMask: {mask!r}")


def shoelace_area(vertices) -> float:
    """Unsigned polygon area from the vertex loop."""
    acc = 0.0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return abs(acc) / 2.0


def mask_area(mask: InstanceMask) -> float:
    """Pixel count for RLE/bitmap masks, shoelace area for polygons."""
    if isinstance(mask, PolygonMask):
        return shoelace_area(mask.vertices)
    if isinstance(mask, RleMask):
        return float(sum(mask.counts[1::2]))
    if isinstance(mask, BitmapMask):
        return float(mask.pixels.sum())
    raise TypeError(f"not an InstanceMask: {mask!r}")


def bbox_of(mask: InstanceMask) -> tuple[float, float, float, float]:
    """Tight axis-aligned (x, y, w, h) bounds of a non-empty mask."""
    if isinstance(mask, PolygonMask):
        xs = [v[0] for v in mask.vertices]
        ys = [v[1] for v in mask.vertices]
        return (min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys))
    if isinstance(mask, RleMask):
        bitmap = rle_decode(mask)
    elif isinstance(mask, BitmapMask):
        bitmap = mask.pixels
    else:
        raise TypeError(f"not an InstanceMask: {mask!r}")
    rows = np.flatnonzero(bitmap.any(axis=1))
    cols = np.flatnonzero(bitmap.any(axis=0))
    if rows.size == 0:
        raise ValueError("empty mask has no bounding box")
    r0, r1 = int(rows[0]), int(rows[-1])
    c0, c1 = int(cols[0]), int(cols[-1])
    return (float(c0), float(r0), float(c1 - c0 + 1), float(r1 - r0 + 1))


def rect_mask(bbox: tuple[float, float, float, float]) -> PolygonMask:
    """Rectangle polygon covering a bbox (for segmentation-less records)."""
    x, y, w, h = bbox
    if w <= 0 or h <= 0:
        raise ValueError(f"degenerate bbox {bbox}")
    return PolygonMask(((x, y), (x + w, y), (x + w, y + h), (x, y + h)))


@dataclass
class ImageRecord:
    id: int
    file_name: str
    width: int
    height: int
    filter: FilterBand | None = None


@dataclass
class Annotation:
    id: int
    image_id: int
    cls: ArtefactClass
    mask: InstanceMask
    bbox: tuple[float, float, float, float]
    area: float
    score: float | None = None  # present iff this is a prediction


@dataclass
class Dataset:
    """Images, categories and annotations, fully linked and immutable-by-convention."""

    images: list[ImageRecord]
    annotations: list[Annotation]
    declared_image_count: int | None = None
    # source-file category id -> class, kept for resolving results files
    category_id_to_class: dict[int, ArtefactClass] = field(
        default_factory=lambda: {int(c): c for c in CLASS_ORDER}, compare=False
    )

    def __post_init__(self):
        self._by_image: dict[int, list[Annotation]] | None = None

    def image_by_id(self) -> dict[int, ImageRecord]:
        return {im.id: im for im in self.images}

    def annotations_by_image(self) -> dict[int, list[Annotation]]:
        """Annotations grouped per image, sorted by annotation id.

        The per-image order is the index convention used by matching.
        """
        if self._by_image is None:
            grouped: dict[int, list[Annotation]] = {im.id: [] for im in self.images}
            for ann in self.annotations:
                grouped[ann.image_id].append(ann)
            for anns in grouped.values():
                anns.sort(key=lambda a: a.id)
            self._by_image = grouped
        return self._by_image

    def class_counts(self) -> dict[ArtefactClass, int]:
        counts = {c: 0 for c in CLASS_ORDER}
        for ann in self.annotations:
            counts[ann.cls] += 1
        return counts


def _infer_filter(file_name: str) -> FilterBand | None:
    stem = file_name.rsplit(".", 1)[0]
    for sep in ("-", "."):
        stem = stem.replace(sep, "_")
    for token in stem.split("_"):
        if token in ("V", "B", "U", "UVW1", "UVM2", "UVW2", "White", "L", "M", "S", "W"):
            return filter_band(token)
    return None


def _mask_from_segmentation(seg, image: ImageRecord, ann_id) -> InstanceMask:
    if isinstance(seg, dict):
        if "size" not in seg or "counts" not in seg:
            raise CocoFormatError(f"annotation {ann_id}: RLE needs 'size' and 'counts'")
        if isinstance(seg["counts"], (str, bytes)):
            raise CocoFormatError(
                f"annotation {ann_id}: compressed RLE strings are not supported"
            )
        h, w = (int(v) for v in seg["size"])
        try:
            return RleMask((h, w), tuple(int(c) for c in seg["counts"]))
        except ValueError as exc:
            raise CocoFormatError(f"annotation {ann_id}: {exc}") from None
    if isinstance(seg, (list, tuple)):
        if not seg:
            raise CocoFormatError(f"annotation {ann_id}: empty segmentation")
        rings = []
        for ring in seg:
            if len(ring) < 6 or len(ring) % 2:
                raise CocoFormatError(
                    f"annotation {ann_id}: polygon ring needs >= 3 (x, y) pairs"
                )
            rings.append(
                tuple((float(ring[i]), float(ring[i + 1])) for i in range(0, len(ring), 2))
            )
        if len(rings) == 1:
            return PolygonMask(rings[0])
        # multi-part polygon: merge parts on the image canvas
        merged = np.zeros((image.height, image.width), dtype=bool)
        for ring in rings:
            merged |= _rasterize_polygon(ring, image.height, image.width)
        return rle_encode(merged)
    raise CocoFormatError(f"annotation {ann_id}: unsupported segmentation type")


def _build_annotation(
    ann_id: int,
    image: ImageRecord,
    cls: ArtefactClass,
    seg,
    bbox,
    score: float | None,
) -> Annotation:
    if seg is not None:
        mask = _mask_from_segmentation(seg, image, ann_id)
        box = bbox_of(mask)
        area = mask_area(mask)
    else:
        if bbox is None:
            raise CocoFormatError(
                f"annotation {ann_id}: needs a segmentation or a bbox"
            )
        box = tuple(float(v) for v in bbox)
        mask = rect_mask(box)  # rectangle stand-in for pure detectors
        area = mask_area(mask)
    return Annotation(ann_id, image.id, cls, mask, box, float(area), score)


def parse_coco(data: bytes | str, kind: str = "groundtruth", reference: Dataset | None = None) -> Dataset:
    """Parse a ground-truth file or a results array into a linked Dataset.

    kind="groundtruth" expects top-level images/annotations/categories;
    kind="predictions" expects a results array of
    {image_id, category_id, segmentation?, bbox?, score} and resolves ids
    against `reference` (required).
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise CocoFormatError(f"not valid JSON: {exc}") from exc

    if kind == "groundtruth":
        return _parse_groundtruth(doc)
    if kind == "predictions":
        if reference is None:
            raise CocoFormatError(
                "parsing predictions requires a reference ground-truth dataset"
            )
        return _parse_predictions(doc, reference)
    raise ValueError(f"unknown kind {kind!r}")


def _parse_groundtruth(doc) -> Dataset:
    if not isinstance(doc, dict):
        raise CocoFormatError("ground truth must be a JSON object")
    for key in ("images", "annotations", "categories"):
        if key not in doc:
            raise CocoFormatError(f"missing top-level array {key!r}")

    cat_map: dict[int, ArtefactClass] = {}
    for cat in doc["categories"]:
        try:
            cid = int(cat["id"])
            cls = artefact_class(str(cat["name"]))
        except KeyError as exc:
            raise CocoFormatError(f"category missing key {exc.args[0]!r}") from None
        if cid in cat_map:
            raise CocoFormatError(f"duplicate category id {cid}")
        if cls in cat_map.values():
            raise CocoFormatError(f"duplicate category for class {cls.name}")
        cat_map[cid] = cls

    images: list[ImageRecord] = []
    seen_img: set[int] = set()
    for im in doc["images"]:
        try:
            iid = int(im["id"])
            if iid in seen_img:
                raise CocoFormatError(f"duplicate image id {iid}")
            seen_img.add(iid)
            name = str(im.get("file_name", f"image_{iid}"))
            filt = None
            if im.get("filter") is not None:
                filt = filter_band(str(im["filter"]))  # unknown names rejected
            else:
                filt = _infer_filter(name)
            images.append(
                ImageRecord(iid, name, int(im["width"]), int(im["height"]), filt)
            )
        except KeyError as exc:
            raise CocoFormatError(f"image record missing key {exc.args[0]!r}") from None
    by_id = {im.id: im for im in images}

    annotations: list[Annotation] = []
    seen_ann: set[int] = set()
    for raw in doc["annotations"]:
        try:
            aid = int(raw["id"])
            iid_ = int(raw["image_id"])
            cid_ = int(raw["category_id"])
        except KeyError as exc:
            raise CocoFormatError(f"annotation missing key {exc.args[0]!r}") from None
        if aid in seen_ann:
            raise CocoFormatError(f"duplicate annotation id {aid}")
        seen_ann.add(aid)
        iid = iid_
        if iid not in by_id:
            raise CocoFormatError(f"annotation {aid}: dangling image_id {iid}")
        cid = cid_
        if cid not in cat_map:
            raise CocoFormatError(f"annotation {aid}: unknown category id {cid}")
        if raw.get("score") is not None:
            raise CocoFormatError(
                f"annotation {aid}: ground truth must not carry a confidence score"
            )
        annotations.append(
            _build_annotation(
                aid, by_id[iid], cat_map[cid], raw.get("segmentation"),
                raw.get("bbox"), None,
            )
        )

    declared = None
    info = doc.get("info")
    if isinstance(info, dict) and info.get("declared_image_count") is not None:
        declared = int(info["declared_image_count"])
    return Dataset(images, annotations, declared, cat_map)


def _parse_predictions(doc, reference: Dataset) -> Dataset:
    if isinstance(doc, dict) and "annotations" in doc:
        records = doc["annotations"]
    elif isinstance(doc, list):
        records = doc
    else:
        raise CocoFormatError("predictions must be a results array")

    by_id = reference.image_by_id()
    cat_map = reference.category_id_to_class
    annotations: list[Annotation] = []
    for i, raw in enumerate(records):
        aid = int(raw.get("id", i + 1))
        iid = int(raw["image_id"])
        if iid not in by_id:
            raise CocoFormatError(f"prediction {i}: dangling image_id {iid}")
        cid = int(raw["category_id"])
        if cid not in cat_map:
            raise CocoFormatError(f"prediction {i}: unknown category id {cid}")
        if "score" not in raw or raw["score"] is None:
            raise CocoFormatError(f"prediction {i}: missing confidence score")
        score = float(raw["score"])
        if not 0.0 <= score <= 1.0:
            raise CocoFormatError(f"prediction {i}: score {score} outside [0, 1]")
        annotations.append(
            _build_annotation(
                aid, by_id[iid], cat_map[cid], raw.get("segmentation"),
                raw.get("bbox"), score,
            )
        )
    return Dataset(
        list(reference.images), annotations, None, dict(cat_map)
    )


def _segmentation_json(mask: InstanceMask):
    if isinstance(mask, PolygonMask):
        flat: list[float] = []
        for x, y in mask.vertices:
            flat.extend((float(x), float(y)))
        return [flat]
    if isinstance(mask, BitmapMask):
        mask = rle_encode(mask.pixels)
    return {"size": [mask.size[0], mask.size[1]], "counts": list(mask.counts)}


def serialize_coco(ds: Dataset, kind: str = "groundtruth") -> str:
    """Canonical JSON: stable ordering and category ids 0-4.

    parse_coco(serialize_coco(ds)) == ds up to field ordering for datasets
    whose masks are polygon- or RLE-encoded (bitmaps are written as RLE).
    """
    anns_out = []
    for ann in sorted(ds.annotations, key=lambda a: a.id):
        rec = {
            "id": ann.id,
            "image_id": ann.image_id,
            "category_id": int(ann.cls),
            "segmentation": _segmentation_json(ann.mask),
            "bbox": [float(v) for v in ann.bbox],
            "area": float(ann.area),
        }
        if kind == "predictions":
            rec["score"] = float(ann.score if ann.score is not None else 1.0)
        else:
            rec["iscrowd"] = 0
        anns_out.append(rec)

    if kind == "predictions":
        return json.dumps(anns_out, indent=1)

    images_out = []
    for im in sorted(ds.images, key=lambda i: i.id):
        rec = {
            "id": im.id,
            "file_name": im.file_name,
            "width": im.width,
            "height": im.height,
        }
        if im.filter is not None:
            rec["filter"] = im.filter.name
        images_out.append(rec)
    doc = {
        "info": {}
        if ds.declared_image_count is None
        else {"declared_image_count": ds.declared_image_count},
        "images": images_out,
        "categories": [
            {"id": int(c), "name": c.name, "supercategory": "artefact"}
            for c in CLASS_ORDER
        ],
        "annotations": anns_out,
    }
    return json.dumps(doc, indent=1)


@dataclass
class FilterRow:
    filter_name: str
    central_wavelength: float | None
    width: float | None
    images: int
    masks: int


@dataclass
class ClassRow:
    class_name: str
    count: int
    percent: float


@dataclass
class StatsTable:
    per_filter: list[FilterRow]
    per_class: list[ClassRow]
    total_images: int
    total_masks: int
    filter_image_sum: int
    declared_image_count: int | None
    bbox_sizes: list[tuple[str, float, float]]  # (class name, w, h)

    @property
    def declared_discrepancy(self) -> int | None:
        """Actual-minus-declared image count; reported, never reconciled."""
        if self.declared_image_count is None:
            return None
        return self.total_images - self.declared_image_count


def dataset_stats(ds: Dataset) -> StatsTable:
    """Per-filter and per-class tallies plus bbox size scatter data."""
    filter_order = ["V", "B", "U", "UVW1", "UVM2", "UVW2", "White"]
    img_by_filter: dict[str, int] = {name: 0 for name in filter_order}
    mask_by_filter: dict[str, int] = {name: 0 for name in filter_order}
    unknown_images = 0
    unknown_masks = 0

    img_filter: dict[int, str | None] = {}
    for im in ds.images:
        name = im.filter.name if im.filter is not None else None
        img_filter[im.id] = name
        if name is None:
            unknown_images += 1
        else:
            img_by_filter[name] += 1
    for ann in ds.annotations:
        name = img_filter[ann.image_id]
        if name is None:
            unknown_masks += 1
        else:
            mask_by_filter[name] += 1

    per_filter = [
        FilterRow(
            name,
            filter_band(name).central_wavelength,
            filter_band(name).width,
            img_by_filter[name],
            mask_by_filter[name],
        )
        for name in filter_order
    ]
    if unknown_images or unknown_masks:
        per_filter.append(FilterRow("unknown", None, None, unknown_images, unknown_masks))

    counts = ds.class_counts()
    total_masks = len(ds.annotations)
    per_class = [
        ClassRow(
            c.name,
            counts[c],
            100.0 * counts[c] / total_masks if total_masks else 0.0,
        )
        for c in CLASS_ORDER
    ]

    bbox_sizes = [(ann.cls.name, ann.bbox[2], ann.bbox[3]) for ann in ds.annotations]
    return StatsTable(
        per_filter=per_filter,
        per_class=per_class,
        total_images=len(ds.images),
        total_masks=total_masks,
        filter_image_sum=sum(r.images for r in per_filter),
        declared_image_count=ds.declared_image_count,
        bbox_sizes=bbox_sizes,
    )


def subset_dataset(ds: Dataset, image_ids: set[int]) -> Dataset:
    """Dataset restricted to the given images (annotations follow)."""
    images = [im for im in ds.images if im.id in image_ids]
    annotations = [a for a in ds.annotations if a.image_id in image_ids]
    return Dataset(images, annotations, None, dict(ds.category_id_to_class))


def strip_scores(ds: Dataset) -> Dataset:
    """Ground-truth view of a predictions dataset (self-evaluation helper)."""
    return Dataset(
        list(ds.images),
        [replace(a, score=None) for a in ds.annotations],
        ds.declared_image_count,
        dict(ds.category_id_to_class),
    )
