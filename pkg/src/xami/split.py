"""Stratified k-fold assignment of images preserving class proportions.

Splitting is image-level: an image's instances never straddle folds.
Images carry multi-class instance multisets, so plain per-class k-fold is
ill-defined; this is the iterative-stratification variant: repeatedly take
the rarest remaining class and place one image containing it into the fold
that still wants that class the most.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .annot import ArtefactClass, CLASS_ORDER, Dataset, subset_dataset


@dataclass(frozen=True)
class SplitSpec:
    k: int
    seed: int
    fold_assignment: dict[int, int]  # image id -> fold index

    def fold_image_ids(self, fold: int) -> set[int]:
        return {iid for iid, f in self.fold_assignment.items() if f == fold}


def stratified_kfold(ds: Dataset, k: int = 4, seed: int = 0) -> SplitSpec:
    """Deterministic iterative stratification over image label multisets.

    Each round picks the class with the fewest remaining instances, then
    assigns the first (seed-shuffled) image containing it to the fold with
    the greatest remaining demand for that class; ties fall to the fold
    with the most remaining image capacity, then the lowest fold index.
    Images with no annotations are distributed round-robin in seed order.
    """
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    if k > len(ds.images):
        raise ValueError(f"k={k} exceeds image count {len(ds.images)}")

    per_image: dict[int, dict[ArtefactClass, int]] = {}
    for im in ds.images:
        per_image[im.id] = {c: 0 for c in CLASS_ORDER}
    for ann in ds.annotations:
        per_image[ann.image_id][ann.cls] += 1

    order = sorted(per_image)
    random.Random(seed).shuffle(order)
    labelled = [iid for iid in order if any(per_image[iid].values())]
    empty = [iid for iid in order if not any(per_image[iid].values())]

    totals = {c: 0 for c in CLASS_ORDER}
    for iid in labelled:
        for c, n in per_image[iid].items():
            totals[c] += n
    remaining = dict(totals)
    demand = [{c: totals[c] / k for c in CLASS_ORDER} for _ in range(k)]
    capacity = [len(ds.images) / k] * k

    assignment: dict[int, int] = {}
    pending = list(labelled)
    while pending:
        rare = min(
            (c for c in CLASS_ORDER if remaining[c] > 0),
            key=lambda c: (remaining[c], int(c)),
        )
        idx = next(i for i, iid in enumerate(pending) if per_image[iid][rare] > 0)
        iid = pending.pop(idx)
        fold = max(
            range(k), key=lambda f: (demand[f][rare], capacity[f], -f)
        )
        assignment[iid] = fold
        capacity[fold] -= 1
        for c, n in per_image[iid].items():
            if n:
                demand[fold][c] -= n
                remaining[c] -= n

    for i, iid in enumerate(empty):
        assignment[iid] = i % k

    return SplitSpec(k, seed, assignment)


def materialize_split(
    ds: Dataset, spec: SplitSpec, val_fold: int
) -> tuple[Dataset, Dataset]:
    """Split into (train, validation) datasets; annotations follow images."""
    if not 0 <= val_fold < spec.k:
        raise ValueError(f"fold index {val_fold} outside 0..{spec.k - 1}")
    val_ids = spec.fold_image_ids(val_fold)
    train_ids = {im.id for im in ds.images} - val_ids
    return subset_dataset(ds, train_ids), subset_dataset(ds, val_ids)


def fold_class_shares(ds: Dataset, spec: SplitSpec) -> list[dict[str, float]]:
    """Per-fold percentage of each class's instances (rows sum to ~100)."""
    counts = [{c: 0 for c in CLASS_ORDER} for _ in range(spec.k)]
    for ann in ds.annotations:
        counts[spec.fold_assignment[ann.image_id]][ann.cls] += 1
    shares = []
    for f in range(spec.k):
        total = sum(counts[f].values())
        shares.append(
            {c.name: (100.0 * counts[f][c] / total if total else 0.0) for c in CLASS_ORDER}
        )
    return shares


def split_manifest_json(spec: SplitSpec) -> str:
    doc = {
        "k": spec.k,
        "seed": spec.seed,
        "folds": {str(iid): fold for iid, fold in sorted(spec.fold_assignment.items())},
    }
    return json.dumps(doc, indent=1) + "\n"


def split_manifest_from_json(text: str) -> SplitSpec:
    doc = json.loads(text)
    return SplitSpec(
        int(doc["k"]),
        int(doc["seed"]),
        {int(iid): int(fold) for iid, fold in doc["folds"].items()},
    )
