"""Prediction-to-truth matching on an IoU cost matrix, plus mask fusion.

Per-image matching is pure and independent across images, so the batch
driver can fan out to worker processes and merge results sorted by
image id.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .annot import (
    Annotation,
    ArtefactClass,
    BitmapMask,
    Dataset,
    InstanceMask,
    PolygonMask,
    RleMask,
    mask_canvas,
    polygon_window,
    rasterize,
    rle_decode,
)
from .assignment import kuhn_munkres

FUSION_CLASSES = frozenset({ArtefactClass.SL, ArtefactClass.OTHER})


@dataclass
class MatchResult:
    """Assignment of predictions to ground truth for one image."""

    pairs: list[tuple[int, int, float]]  # (pred index, gt index, IoU)
    false_positives: list[int]
    false_negatives: list[int]
    iou_threshold: float
    image_id: int | None = None


@dataclass(frozen=True)
class BackgroundStats:
    median: float
    sigma: float
    k_clip: float = 3.0
    iterations: int = 5


def _resolve_shape(
    a: InstanceMask, b: InstanceMask, shape: tuple[int, int] | None
) -> tuple[int, int]:
    shapes = {s for s in (mask_canvas(a), mask_canvas(b), shape) if s is not None}
    if len(shapes) > 1:
        raise ValueError(f"canvas mismatch: {sorted(shapes)}")
    if not shapes:
        raise ValueError("polygon-only masks need an explicit canvas shape")
    return shapes.pop()


def iou(a: InstanceMask, b: InstanceMask, shape: tuple[int, int] | None = None) -> float:
    """Intersection over union of two masks on a shared canvas."""
    h, w = _resolve_shape(a, b, shape)
    bm_a = rasterize(a, h, w)
    bm_b = rasterize(b, h, w)
    union = int(np.logical_or(bm_a, bm_b).sum())
    if union == 0:
        raise ValueError("both masks are empty; IoU undefined")
    inter = int(np.logical_and(bm_a, bm_b).sum())
    return inter / union


class CroppedMask:
    """Bitmap restricted to a bounding window, for fast pairwise overlap."""

    __slots__ = ("r0", "r1", "c0", "c1", "area", "crop")

    def __init__(self, r0: int, c0: int, crop: np.ndarray):
        self.r0 = r0
        self.c0 = c0
        self.r1 = r0 + crop.shape[0]
        self.c1 = c0 + crop.shape[1]
        self.crop = crop
        self.area = int(crop.sum())

    @classmethod
    def from_bitmap(cls, bitmap: np.ndarray) -> "CroppedMask":
        rows = np.flatnonzero(bitmap.any(axis=1))
        cols = np.flatnonzero(bitmap.any(axis=0))
        if rows.size == 0:
            return cls(0, 0, bitmap[0:0, 0:0])
        r0, r1 = int(rows[0]), int(rows[-1]) + 1
        c0, c1 = int(cols[0]), int(cols[-1]) + 1
        return cls(r0, c0, bitmap[r0:r1, c0:c1])


def cropped_mask(mask: InstanceMask, h: int, w: int) -> CroppedMask:
    """Window-local bitmap of any mask encoding, clipped to the canvas."""
    if isinstance(mask, PolygonMask):
        xs = [v[0] for v in mask.vertices]
        ys = [v[1] for v in mask.vertices]
        if min(xs) < -1.0 or max(xs) > w + 1.0 or min(ys) < -1.0 or max(ys) > h + 1.0:
            raise ValueError(
                f"polygon vertices outside canvas {w}x{h} beyond 1 px tolerance"
            )
        r0, c0, crop = polygon_window(mask.vertices)
        rr0, cc0 = max(0, r0), max(0, c0)
        rr1 = min(h, r0 + crop.shape[0])
        cc1 = min(w, c0 + crop.shape[1])
        if rr1 <= rr0 or cc1 <= cc0:
            return CroppedMask(0, 0, np.zeros((0, 0), dtype=bool))
        return CroppedMask(
            rr0, cc0, crop[rr0 - r0 : rr1 - r0, cc0 - c0 : cc1 - c0]
        )
    if isinstance(mask, RleMask):
        if mask.size != (h, w):
            raise ValueError(f"RLE canvas {mask.size} != requested {(h, w)}")
        return CroppedMask.from_bitmap(rle_decode(mask))
    if isinstance(mask, BitmapMask):
        if mask.pixels.shape != (h, w):
            raise ValueError(f"bitmap canvas {mask.pixels.shape} != requested {(h, w)}")
        return CroppedMask.from_bitmap(mask.pixels)
    raise TypeError(f"not an InstanceMask: {mask!r}")


def _pair_iou(a: CroppedMask, b: CroppedMask) -> float:
    if a.area == 0 and b.area == 0:
        raise ValueError("both masks are empty; IoU undefined")
    r0 = max(a.r0, b.r0)
    r1 = min(a.r1, b.r1)
    c0 = max(a.c0, b.c0)
    c1 = min(a.c1, b.c1)
    if r0 >= r1 or c0 >= c1:
        return 0.0
    wa = a.crop[r0 - a.r0 : r1 - a.r0, c0 - a.c0 : c1 - a.c0]
    wb = b.crop[r0 - b.r0 : r1 - b.r0, c0 - b.c0 : c1 - b.c0]
    inter = int(np.logical_and(wa, wb).sum())
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)


def iou_matrix(
    preds: list[Annotation],
    gts: list[Annotation],
    shape: tuple[int, int],
    class_aware: bool = True,
) -> np.ndarray:
    """Pairwise IoU, rows = predictions, cols = ground truths.

    In class-aware mode cross-class entries are forced to 0 so their
    assignment cost is the 1.0 maximum.
    """
    h, w = shape
    pc = [cropped_mask(p.mask, h, w) for p in preds]
    gc = [cropped_mask(g.mask, h, w) for g in gts]
    m = np.zeros((len(preds), len(gts)), dtype=np.float64)
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            if class_aware and p.cls != g.cls:
                continue
            if pc[i].area == 0 and gc[j].area == 0:
                continue
            m[i, j] = _pair_iou(pc[i], gc[j])
    return m


def match_instances(
    preds: list[Annotation],
    gts: list[Annotation],
    iou_threshold: float = 0.5,
    class_aware: bool = True,
    shape: tuple[int, int] | None = None,
) -> MatchResult:
    """Optimal one-to-one assignment on 1-IoU, thresholded into TP/FP/FN."""
    image_ids = {a.image_id for a in preds} | {a.image_id for a in gts}
    if len(image_ids) > 1:
        raise ValueError(f"annotations from multiple images: {sorted(image_ids)}")
    image_id = image_ids.pop() if image_ids else None

    if shape is None:
        canvases = {
            c for a in (*preds, *gts) if (c := mask_canvas(a.mask)) is not None
        }
        if len(canvases) > 1:
            raise ValueError(f"canvas mismatch: {sorted(canvases)}")
        if not canvases:
            raise ValueError("polygon-only annotations need an explicit canvas shape")
        shape = canvases.pop()

    if not preds or not gts:
        return MatchResult(
            [], list(range(len(preds))), list(range(len(gts))),
            iou_threshold, image_id,
        )

    m = iou_matrix(preds, gts, shape, class_aware)
    assignment = kuhn_munkres(1.0 - m)

    pairs: list[tuple[int, int, float]] = []
    fp = set(range(len(preds)))
    fn = set(range(len(gts)))
    for r, c in assignment:
        pair_iou = float(m[r, c])
        if pair_iou >= iou_threshold and pair_iou > 0.0:
            pairs.append((r, c, pair_iou))
            fp.discard(r)
            fn.discard(c)
    return MatchResult(
        sorted(pairs), sorted(fp), sorted(fn), iou_threshold, image_id
    )


def _match_chunk(args) -> list[MatchResult]:
    groups, iou_threshold, class_aware = args
    out = []
    for image_id, shape, preds, gts in groups:
        res = match_instances(preds, gts, iou_threshold, class_aware, shape)
        res.image_id = image_id
        out.append(res)
    return out


def match_dataset(
    gt: Dataset,
    preds: Dataset,
    iou_threshold: float = 0.5,
    class_aware: bool = True,
    jobs: int = 1,
) -> list[MatchResult]:
    """Per-image matching over a whole dataset, sorted by image id.

    Indices in each MatchResult refer to that image's annotations sorted
    by annotation id (the `annotations_by_image` convention).
    """
    gt_by_image = gt.annotations_by_image()
    pred_by_image = preds.annotations_by_image()
    groups = []
    for im in sorted(gt.images, key=lambda i: i.id):
        groups.append(
            (
                im.id,
                (im.height, im.width),
                pred_by_image.get(im.id, []),
                gt_by_image.get(im.id, []),
            )
        )

    if jobs <= 1 or len(groups) < 2:
        return _match_chunk((groups, iou_threshold, class_aware))

    jobs = min(jobs, len(groups))
    chunks = [
        (groups[i::jobs], iou_threshold, class_aware) for i in range(jobs)
    ]
    results: list[MatchResult] = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_match_chunk, chunks):
            results.extend(part)
    results.sort(key=lambda r: r.image_id if r.image_id is not None else -1)
    return results


def background_stats(
    grid: np.ndarray, k_clip: float = 3.0, iterations: int = 5
) -> BackgroundStats:
    """Sigma-clipped frame statistics: iterate median/std clipping.

    Each round rejects pixels outside median +- k_clip * sigma until no
    pixel moves or the round budget is exhausted.
    """
    values = np.asarray(grid, dtype=np.float64).ravel()
    values = values[np.isfinite(values)]
    if values.size < 5:
        raise ValueError(f"need at least 5 finite pixels, got {values.size}")
    for _ in range(iterations):
        median = float(np.median(values))
        sigma = float(values.std())
        kept = values[np.abs(values - median) <= k_clip * sigma]
        if kept.size == 0:
            raise ValueError("sigma clipping rejected every pixel")
        if kept.size == values.size:
            break
        values = kept
    median = float(np.median(values))
    sigma = float(values.std())
    return BackgroundStats(median, sigma, k_clip, iterations)


def is_faint(mask: InstanceMask, grid: np.ndarray, bg: BackgroundStats) -> bool:
    """True iff the mean intensity under the mask is <= median + 1 sigma.

    The boundary is inclusive: exactly one sigma above background still
    counts as faint.
    """
    arr = np.asarray(grid, dtype=np.float64)
    bitmap = rasterize(mask, arr.shape[0], arr.shape[1])
    if not bitmap.any():
        raise ValueError("empty mask has no photometry")
    mean = float(arr[bitmap].mean())
    return mean <= bg.median + 1.0 * bg.sigma


def fuse_masks(
    detector_mask: InstanceMask,
    segmenter_mask: InstanceMask,
    cls: ArtefactClass,
    grid: np.ndarray,
    bg: BackgroundStats,
) -> InstanceMask:
    """Pick the detector's mask for faint star-loop/other objects.

    Faintness is judged on the segmenter's footprint (the candidate being
    replaced). All other classes, and bright objects, keep the segmenter
    mask. The result is always one of the two inputs.
    """
    arr = np.asarray(grid, dtype=np.float64)
    shape = arr.shape
    for m in (detector_mask, segmenter_mask):
        canvas = mask_canvas(m)
        if canvas is not None and canvas != shape:
            raise ValueError(f"mask canvas {canvas} != frame {shape}")
    if cls in FUSION_CLASSES and is_faint(segmenter_mask, arr, bg):
        return detector_mask
    return segmenter_mask


def matches_to_jsonl(matches: list[MatchResult]) -> str:
    """One JSON record per image: pairs with IoUs plus FP/FN index lists."""
    lines = []
    for m in matches:
        lines.append(
            json.dumps(
                {
                    "image_id": m.image_id,
                    "iou_threshold": m.iou_threshold,
                    "pairs": [[p, g, i] for p, g, i in m.pairs],
                    "false_positives": m.false_positives,
                    "false_negatives": m.false_negatives,
                }
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def matches_from_jsonl(text: str) -> list[MatchResult]:
    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        out.append(
            MatchResult(
                [(int(p), int(g), float(i)) for p, g, i in doc["pairs"]],
                [int(i) for i in doc["false_positives"]],
                [int(i) for i in doc["false_negatives"]],
                float(doc["iou_threshold"]),
                doc.get("image_id"),
            )
        )
    return out
