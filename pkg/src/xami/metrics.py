"""Confusion accounting, precision/recall, IoU statistics, loss diagnostics.

All aggregation is pure and deterministic; report files are byte-identical
across reruns for identical inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .annot import ArtefactClass, CLASS_ORDER, Dataset
from .matching import CroppedMask, MatchResult, cropped_mask
from .plots import line_plot_svg

FOCAL_EPS = 1e-7


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def add(self, other: "ConfusionCounts") -> None:
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn


def precision_recall(c: ConfusionCounts) -> tuple[float | None, float | None]:
    """Percent precision and recall; None when the denominator is zero.

    None distinguishes "no predictions" from "all predictions wrong".
    """
    if c.tp < 0 or c.fp < 0 or c.fn < 0:
        raise ValueError("confusion counts must be non-negative")
    p = 100.0 * c.tp / (c.tp + c.fp) if c.tp + c.fp else None
    r = 100.0 * c.tp / (c.tp + c.fn) if c.tp + c.fn else None
    return p, r


@dataclass
class IoUStats:
    cdf_samples: list[float]  # sorted pair IoUs; CDF y = (i+1)/n
    mean: float
    std: float  # population std over per-image means
    per_image_means: list[float]


def iou_distribution(matches: list[MatchResult]) -> IoUStats:
    """Pool pair IoUs into a CDF and per-image means (zeros for FP/FN).

    Images with no instances at all are skipped; the dataset mean/std are
    computed over per-image means with population normalization.
    """
    if not matches:
        raise ValueError("empty match set")
    all_ious: list[float] = []
    per_image: list[float] = []
    for m in matches:
        n = len(m.pairs) + len(m.false_positives) + len(m.false_negatives)
        if n == 0:
            continue
        ious = [i for _, _, i in m.pairs]
        all_ious.extend(ious)
        per_image.append(sum(ious) / n)
    if not all_ious:
        raise ValueError("no matched pairs in match set")
    arr = np.asarray(per_image, dtype=np.float64)
    return IoUStats(
        cdf_samples=sorted(all_ious),
        mean=float(arr.mean()),
        std=float(arr.std()),
        per_image_means=per_image,
    )


def _check_maps(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=bool)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs gt {g.shape}")
    return p, g


def dice_loss(pred, gt) -> float:
    """1 - Dice overlap of a probability map against a boolean mask."""
    p, g = _check_maps(pred, gt)
    denom = float(p.sum()) + float(g.sum())
    if denom == 0.0:
        return 0.0
    return 1.0 - 2.0 * float((p * g).sum()) / denom


def focal_loss(pred, gt, gamma: float = 2.0, alpha: float = 0.25) -> float:
    """Mean pixel focal term -alpha_t (1 - p_t)^gamma log(p_t).

    p is clamped to [eps, 1-eps]; p_t is p on foreground and 1-p on
    background, alpha_t likewise alpha / 1-alpha.
    """
    p, g = _check_maps(pred, gt)
    p = np.clip(p, FOCAL_EPS, 1.0 - FOCAL_EPS)
    p_t = np.where(g, p, 1.0 - p)
    a_t = np.where(g, alpha, 1.0 - alpha)
    terms = -a_t * (1.0 - p_t) ** gamma * np.log(p_t)
    return float(terms.mean())


def combined_loss(pred, gt, gamma: float = 2.0, alpha: float = 0.25) -> float:
    """Focal and dice in the fixed 20:1 weighting."""
    return 20.0 * focal_loss(pred, gt, gamma, alpha) + dice_loss(pred, gt)


def _background_focal_term(gamma: float, alpha: float) -> float:
    """Focal term of a p=0 pixel on background (analytic off-crop value)."""
    p = FOCAL_EPS
    p_t = 1.0 - p
    return -(1.0 - alpha) * (1.0 - p_t) ** gamma * math.log(p_t)


@dataclass
class PairLosses:
    focal: float
    dice: float
    combined: float


def pair_losses(
    pred: CroppedMask, gt: CroppedMask, shape: tuple[int, int],
    gamma: float = 2.0, alpha: float = 0.25,
) -> PairLosses:
    """Diagnostics for one matched pair, binary prediction as probability map.

    Computed on the union bounding window; the focal contribution of the
    all-background remainder is added analytically (identical to the
    full-frame value, just cheaper).
    """
    n_total = shape[0] * shape[1]
    t0 = _background_focal_term(gamma, alpha)
    if pred.area == 0 and gt.area == 0:
        return PairLosses(t0, 0.0, 20.0 * t0)
    boxes = [m for m in (pred, gt) if m.area]
    r0 = min(m.r0 for m in boxes)
    r1 = max(m.r1 for m in boxes)
    c0 = min(m.c0 for m in boxes)
    c1 = max(m.c1 for m in boxes)
    window = (r1 - r0, c1 - c0)
    p = np.zeros(window, dtype=np.float64)
    g = np.zeros(window, dtype=bool)
    if pred.area:
        p[pred.r0 - r0 : pred.r1 - r0, pred.c0 - c0 : pred.c1 - c0] = pred.crop
    if gt.area:
        g[gt.r0 - r0 : gt.r1 - r0, gt.c0 - c0 : gt.c1 - c0] = gt.crop

    pc = np.clip(p, FOCAL_EPS, 1.0 - FOCAL_EPS)
    p_t = np.where(g, pc, 1.0 - pc)
    a_t = np.where(g, alpha, 1.0 - alpha)
    crop_sum = float((-a_t * (1.0 - p_t) ** gamma * np.log(p_t)).sum())
    n_out = n_total - p.size
    focal = (crop_sum + n_out * t0) / n_total

    denom = float(p.sum()) + float(g.sum())
    dice = 1.0 - 2.0 * float((p * g).sum()) / denom if denom else 0.0
    return PairLosses(focal, dice, 20.0 * focal + dice)


@dataclass
class ClassReport:
    class_name: str
    tp: int
    fp: int
    fn: int
    precision: float | None
    recall: float | None


@dataclass
class MetricsReport:
    per_class: list[ClassReport]
    overall_micro: ClassReport
    overall_macro_precision: float | None
    overall_macro_recall: float | None
    iou_mean: float | None
    iou_std: float | None
    iou_cdf: list[float]
    per_image_mean_iou: list[tuple[int, float]]  # (image id, mean IoU)
    mean_focal: float | None
    mean_dice: float | None
    mean_combined: float | None
    iou_threshold: float
    class_aware: bool
    notes: tuple[str, ...] = (
        "per-image mean IoU counts unmatched instances as 0",
        "std is population (ddof=0) over per-image means",
        "overall_micro pools confusion counts; overall_macro averages defined classes",
    )


def build_report(
    dataset: Dataset,
    predictions: Dataset,
    matches: list[MatchResult],
    *,
    iou_threshold: float = 0.5,
    class_aware: bool = True,
    with_losses: bool = True,
) -> MetricsReport:
    """Assemble confusion counts, P/R, IoU statistics and loss diagnostics.

    Match indices are resolved against the two datasets' per-image
    annotation lists (sorted by annotation id); a TP requires the classes
    to agree, otherwise the pair degrades to FP + FN.
    """
    gt_by_image = dataset.annotations_by_image()
    pred_by_image = predictions.annotations_by_image()
    image_dims = {im.id: (im.height, im.width) for im in dataset.images}

    confusion = {c: ConfusionCounts() for c in CLASS_ORDER}
    focal_sum = dice_sum = comb_sum = 0.0
    n_pairs = 0
    per_image_mean: list[tuple[int, float]] = []
    all_ious: list[float] = []

    for m in matches:
        if m.image_id is None:
            raise ValueError("match record lacks an image id")
        if m.image_id not in image_dims:
            raise ValueError(f"match references unknown image {m.image_id}")
        gts = gt_by_image.get(m.image_id, [])
        preds = pred_by_image.get(m.image_id, [])
        n_instances = len(m.pairs) + len(m.false_positives) + len(m.false_negatives)
        h, w = image_dims[m.image_id]

        ious = []
        for p_idx, g_idx, pair_iou in m.pairs:
            try:
                pred_ann = preds[p_idx]
                gt_ann = gts[g_idx]
            except IndexError:
                raise ValueError(
                    f"match indices out of range for image {m.image_id}"
                ) from None
            ious.append(pair_iou)
            if pred_ann.cls == gt_ann.cls:
                confusion[gt_ann.cls].tp += 1
            else:
                confusion[pred_ann.cls].fp += 1
                confusion[gt_ann.cls].fn += 1
            if with_losses:
                losses = pair_losses(
                    cropped_mask(pred_ann.mask, h, w),
                    cropped_mask(gt_ann.mask, h, w),
                    (h, w),
                )
                focal_sum += losses.focal
                dice_sum += losses.dice
                comb_sum += losses.combined
                n_pairs += 1
        for p_idx in m.false_positives:
            confusion[preds[p_idx].cls].fp += 1
        for g_idx in m.false_negatives:
            confusion[gts[g_idx].cls].fn += 1

        if n_instances:
            per_image_mean.append((m.image_id, sum(ious) / n_instances))
            all_ious.extend(ious)

    per_class = []
    for c in CLASS_ORDER:
        p, r = precision_recall(confusion[c])
        cc = confusion[c]
        per_class.append(ClassReport(c.name, cc.tp, cc.fp, cc.fn, p, r))

    overall = ConfusionCounts()
    for c in CLASS_ORDER:
        overall.add(confusion[c])
    p, r = precision_recall(overall)
    overall_micro = ClassReport("overall", overall.tp, overall.fp, overall.fn, p, r)

    macro_p = [cr.precision for cr in per_class if cr.precision is not None]
    macro_r = [cr.recall for cr in per_class if cr.recall is not None]

    if per_image_mean:
        means = np.asarray([v for _, v in per_image_mean], dtype=np.float64)
        iou_mean = float(means.mean())
        iou_std = float(means.std())
    else:
        iou_mean = iou_std = None

    return MetricsReport(
        per_class=per_class,
        overall_micro=overall_micro,
        overall_macro_precision=sum(macro_p) / len(macro_p) if macro_p else None,
        overall_macro_recall=sum(macro_r) / len(macro_r) if macro_r else None,
        iou_mean=iou_mean,
        iou_std=iou_std,
        iou_cdf=sorted(all_ious),
        per_image_mean_iou=per_image_mean,
        mean_focal=focal_sum / n_pairs if n_pairs else None,
        mean_dice=dice_sum / n_pairs if n_pairs else None,
        mean_combined=comb_sum / n_pairs if n_pairs else None,
        iou_threshold=iou_threshold,
        class_aware=class_aware,
    )


def _pct(v: float | None) -> str:
    return "" if v is None else f"{v:.2f}"


def report_csv(report: MetricsReport) -> str:
    """Per-class rows (category, counts, P, R) plus both overall flavours."""
    lines = ["category,tp,fp,fn,precision_pct,recall_pct"]
    for cr in report.per_class + [report.overall_micro]:
        lines.append(
            f"{cr.class_name},{cr.tp},{cr.fp},{cr.fn},"
            f"{_pct(cr.precision)},{_pct(cr.recall)}"
        )
    lines.append(
        f"overall_macro,,,,{_pct(report.overall_macro_precision)},"
        f"{_pct(report.overall_macro_recall)}"
    )
    return "\n".join(lines) + "\n"


def report_json(report: MetricsReport) -> str:
    doc = {
        "params": {
            "iou_threshold": report.iou_threshold,
            "class_aware": report.class_aware,
        },
        "per_class": [
            {
                "category": cr.class_name,
                "tp": cr.tp,
                "fp": cr.fp,
                "fn": cr.fn,
                "precision_pct": cr.precision,
                "recall_pct": cr.recall,
            }
            for cr in report.per_class
        ],
        "overall": {
            "micro": {
                "tp": report.overall_micro.tp,
                "fp": report.overall_micro.fp,
                "fn": report.overall_micro.fn,
                "precision_pct": report.overall_micro.precision,
                "recall_pct": report.overall_micro.recall,
            },
            "macro": {
                "precision_pct": report.overall_macro_precision,
                "recall_pct": report.overall_macro_recall,
            },
        },
        "iou": {
            "mean": report.iou_mean,
            "std": report.iou_std,
            "n_pairs": len(report.iou_cdf),
        },
        "losses": {
            "mean_focal": report.mean_focal,
            "mean_dice": report.mean_dice,
            "mean_combined": report.mean_combined,
        },
        "notes": list(report.notes),
    }
    return json.dumps(doc, indent=1) + "\n"


def iou_cdf_csv(report: MetricsReport) -> str:
    lines = ["iou,cumulative_fraction"]
    n = len(report.iou_cdf)
    for i, v in enumerate(report.iou_cdf):
        lines.append(f"{v:.6f},{(i + 1) / n:.6f}")
    return "\n".join(lines) + "\n"


def per_image_iou_csv(report: MetricsReport) -> str:
    lines = ["image_id,mean_iou"]
    for image_id, v in report.per_image_mean_iou:
        lines.append(f"{image_id},{v:.6f}")
    return "\n".join(lines) + "\n"


def iou_cdf_svg(report: MetricsReport) -> str:
    n = len(report.iou_cdf)
    if n == 0:
        xs, ys = [0.0, 1.0], [0.0, 0.0]
    else:
        xs = [0.0] + list(report.iou_cdf)
        ys = [0.0] + [(i + 1) / n for i in range(n)]
    return line_plot_svg(
        xs, ys,
        title="IoU cumulative distribution",
        xlabel="IoU", ylabel="cumulative fraction",
        xlim=(0.0, 1.0), ylim=(0.0, 1.0),
    )


def format_report_table(report: MetricsReport) -> str:
    """Console table in the per-class precision/recall layout."""
    lines = [
        f"matching: iou_threshold={report.iou_threshold} "
        f"class_aware={report.class_aware}",
        f"{'Category':<10} {'Precision':>10} {'Recall':>10}",
    ]
    rows = [report.overall_micro] + report.per_class
    for cr in rows:
        p = "null" if cr.precision is None else f"{cr.precision:.1f}"
        r = "null" if cr.recall is None else f"{cr.recall:.1f}"
        name = "Overall" if cr.class_name == "overall" else cr.class_name
        lines.append(f"{name:<10} {p:>10} {r:>10}")
    if report.iou_mean is not None:
        lines.append(
            f"mean IoU over images: {report.iou_mean:.3f} +- {report.iou_std:.3f}"
        )
    return "\n".join(lines)
