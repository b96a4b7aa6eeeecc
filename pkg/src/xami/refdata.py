"""Deterministic synthetic corpus mirroring the public OM artefact tallies.

The real annotation corpus is distributed separately; this builder emits a
stand-in with exactly the published per-filter image/mask counts and
per-class totals, so statistics, splitting and evaluation can be exercised
(and demoed) without the download. Geometry is synthetic but class-shaped:
streaks are thin and column-aligned, central rings sit near the frame
center, and so on.
"""

from __future__ import annotations

import math
import random

import numpy as np

from .annot import (
    Annotation,
    ArtefactClass,
    CLASS_ORDER,
    Dataset,
    ImageRecord,
    PolygonMask,
    bbox_of,
    mask_area,
    rasterize,
    rle_encode,
)
from .imgproc import filter_band

# Published reference tallies: filter -> (images, masks); class -> instances.
FILTER_TALLIES = {
    "V": (102, 880),
    "B": (116, 1259),
    "U": (193, 1837),
    "UVW1": (403, 2127),
    "UVM2": (175, 681),
    "UVW2": (63, 226),
    "White": (3, 11),
}

CLASS_TOTALS = {
    ArtefactClass.CR: 668,
    ArtefactClass.SR: 1669,
    ArtefactClass.SL: 1844,
    ArtefactClass.ROS: 2799,
    ArtefactClass.OTHER: 41,
}

# Validation-fold class shares (%) the reference split achieved.
VALIDATION_SHARES = {
    ArtefactClass.CR: 9.75,
    ArtefactClass.SR: 23.33,
    ArtefactClass.SL: 27.10,
    ArtefactClass.ROS: 39.29,
    ArtefactClass.OTHER: 0.52,
}

VALIDATION_SIZE = 1723
DECLARED_IMAGE_COUNT = 1000  # stated corpus size; filter rows sum to 1055
IMAGE_SIZE = 512


def _apportion(remaining: dict, budget: int) -> dict:
    """Largest-remainder split of `budget` across classes, capped at remaining."""
    total = sum(remaining.values())
    if budget > total:
        raise ValueError("budget exceeds remaining instances")
    exact = {c: remaining[c] * budget / total for c in remaining}
    out = {c: min(int(exact[c]), remaining[c]) for c in remaining}
    leftover = budget - sum(out.values())
    order = sorted(
        remaining,
        key=lambda c: (exact[c] - int(exact[c]), -int(c)),
        reverse=True,
    )
    i = 0
    while leftover > 0:
        c = order[i % len(order)]
        if out[c] < remaining[c]:
            out[c] += 1
            leftover -= 1
        i += 1
    return out


def _regular_polygon(cx, cy, radius, n, rng, squash=1.0, angle0=0.0):
    pts = []
    for i in range(n):
        ang = angle0 + 2.0 * math.pi * i / n
        r = radius * (0.8 + 0.4 * rng.random())
        pts.append((cx + r * math.cos(ang), cy + squash * r * math.sin(ang)))
    return pts


def _rotated_rect(cx, cy, length, width, angle):
    ux, uy = math.cos(angle), math.sin(angle)
    vx, vy = -uy, ux
    hl, hw = length / 2.0, width / 2.0
    return [
        (cx - hl * ux - hw * vx, cy - hl * uy - hw * vy),
        (cx + hl * ux - hw * vx, cy + hl * uy - hw * vy),
        (cx + hl * ux + hw * vx, cy + hl * uy + hw * vy),
        (cx - hl * ux + hw * vx, cy - hl * uy + hw * vy),
    ]


def _clamp_vertices(pts, size):
    return tuple(
        (min(max(x, 0.0), float(size)), min(max(y, 0.0), float(size)))
        for x, y in pts
    )


def _make_shape(cls: ArtefactClass, rng: random.Random, size: int) -> PolygonMask:
    if cls is ArtefactClass.CR:
        cx = size / 2 + rng.uniform(-12, 12)
        cy = size / 2 + rng.uniform(-12, 12)
        pts = _regular_polygon(cx, cy, rng.uniform(18, 40), 16, rng)
    elif cls is ArtefactClass.SR:
        cx = rng.uniform(20, size - 20)
        cy = rng.uniform(20, size - 20)
        pts = _regular_polygon(cx, cy, rng.uniform(4, 12), 12, rng)
    elif cls is ArtefactClass.SL:
        cx = rng.uniform(60, size - 60)
        cy = rng.uniform(60, size - 60)
        pts = _rotated_rect(
            cx, cy, rng.uniform(30, 110), rng.uniform(4, 12),
            rng.uniform(0, math.pi),
        )
    elif cls is ArtefactClass.ROS:
        w = rng.uniform(3, 6)
        h = rng.uniform(100, 380)
        x = rng.uniform(2, size - w - 2)
        y = rng.uniform(2, size - h - 2)
        pts = [(x, y), (x + w, y), (x + w, y + h), (x, y + h)]
    else:  # OTHER: large irregular blob
        cx = rng.uniform(80, size - 80)
        cy = rng.uniform(80, size - 80)
        pts = _regular_polygon(cx, cy, rng.uniform(30, 75), 8, rng, squash=0.7)
    return PolygonMask(_clamp_vertices(pts, size))


def build_reference_corpus(seed: int = 7021, image_size: int = IMAGE_SIZE) -> Dataset:
    """Synthetic ground truth with the published marginal tallies.

    Deterministic in `seed`; every 6th annotation is stored RLE-encoded so
    both mask encodings flow through downstream code.
    """
    rng = random.Random(seed)
    images: list[ImageRecord] = []
    annotations: list[Annotation] = []
    remaining = dict(CLASS_TOTALS)
    remaining_masks = sum(remaining.values())

    image_id = 0
    ann_id = 0
    for name, (n_images, n_masks) in FILTER_TALLIES.items():
        alloc = _apportion(remaining, n_masks)
        for c in alloc:
            remaining[c] -= alloc[c]
        remaining_masks -= n_masks

        first_image_id = image_id + 1
        for i in range(n_images):
            image_id += 1
            images.append(
                ImageRecord(
                    image_id,
                    f"om_{name}_{image_id:04d}.png",
                    image_size,
                    image_size,
                    filter_band(name),
                )
            )

        class_list: list[ArtefactClass] = []
        for c in CLASS_ORDER:
            class_list.extend([c] * alloc[c])
        rng.shuffle(class_list)
        for i, cls in enumerate(class_list):
            ann_id += 1
            polygon = _make_shape(cls, rng, image_size)
            mask = polygon
            if ann_id % 6 == 0:
                mask = rle_encode(rasterize(polygon, image_size, image_size))
            annotations.append(
                Annotation(
                    ann_id,
                    first_image_id + (i % n_images),
                    cls,
                    mask,
                    bbox_of(mask),
                    mask_area(mask),
                )
            )

    assert remaining_masks == 0 and not any(remaining.values())
    return Dataset(images, annotations, DECLARED_IMAGE_COUNT)


def _shift_mask(ann: Annotation, dx: float, dy: float, size: int):
    if isinstance(ann.mask, PolygonMask):
        return PolygonMask(
            _clamp_vertices(
                [(x + dx, y + dy) for x, y in ann.mask.vertices], size
            )
        )
    bitmap = rasterize(ann.mask, size, size)
    shifted = np.zeros_like(bitmap)
    idx, idy = int(round(dx)), int(round(dy))
    src = bitmap[
        max(0, -idy) : size - max(0, idy), max(0, -idx) : size - max(0, idx)
    ]
    shifted[
        max(0, idy) : size - max(0, -idy), max(0, idx) : size - max(0, -idx)
    ] = src
    return rle_encode(shifted)


def perturbed_predictions(
    ds: Dataset,
    seed: int = 99,
    drop_rate: float = 0.15,
    jitter_frac: float = 0.12,
    extra_rate: float = 0.08,
    misclass_rate: float = 0.04,
    image_size: int = IMAGE_SIZE,
) -> Dataset:
    """Jittered copy of the ground truth posing as model output.

    Drops some instances (future FNs), shifts the rest by a fraction of
    each bbox dimension (thin shapes keep meaningful overlap), occasionally
    flips a class, and sprinkles spurious detections (future FPs).
    """
    rng = random.Random(seed)
    preds: list[Annotation] = []
    ann_id = 0
    for ann in ds.annotations:
        if rng.random() < drop_rate:
            continue
        ann_id += 1
        dx = rng.uniform(-1, 1) * jitter_frac * max(1.0, ann.bbox[2])
        dy = rng.uniform(-1, 1) * jitter_frac * max(1.0, ann.bbox[3])
        mask = _shift_mask(ann, dx, dy, image_size)
        if mask_area(mask) < 1.0:  # jittered off-canvas; keep the original
            mask = ann.mask
        cls = ann.cls
        if rng.random() < misclass_rate:
            cls = rng.choice([c for c in CLASS_ORDER if c != ann.cls])
        preds.append(
            Annotation(
                ann_id,
                ann.image_id,
                cls,
                mask,
                bbox_of(mask),
                mask_area(mask),
                score=round(rng.uniform(0.5, 1.0), 3),
            )
        )
    for im in ds.images:
        if rng.random() < extra_rate:
            ann_id += 1
            cls = rng.choice(CLASS_ORDER)
            mask = _make_shape(cls, rng, image_size)
            preds.append(
                Annotation(
                    ann_id, im.id, cls, mask, bbox_of(mask), mask_area(mask),
                    score=round(rng.uniform(0.3, 0.9), 3),
                )
            )
    return Dataset(list(ds.images), preds, None, dict(ds.category_id_to_class))
