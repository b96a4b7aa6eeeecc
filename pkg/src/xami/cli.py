"""Command-line entry point: preprocess, split, eval, stats.

Every command is deterministic under a fixed config and seed, and write
ordering is sorted (by file name or image id) so rerun artifacts are
byte-identical. Per-item failures are collected into errors.json and turn
the exit code to 1; fatal problems exit 2.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import annot, imgproc, metrics, split as splitmod
from .annot import CocoFormatError, Dataset, dataset_stats, parse_coco, serialize_coco
from .config import ConfigError, RunConfig, apply_overrides, load_config
from .fitsio import FitsParseError, read_fits
from .imgproc import PngReadError, read_png_grayscale
from .matching import (
    FUSION_CLASSES,
    background_stats,
    fuse_masks,
    match_dataset,
    matches_to_jsonl,
)
from .plots import scatter_plot_svg

log = logging.getLogger("xami")


def _setup_logging() -> None:
    level = os.environ.get("XAMI_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = dict(
        images=getattr(args, "images", None),
        gt=getattr(args, "gt", None),
        preds=getattr(args, "preds", None),
        out=getattr(args, "out", None),
        jobs=getattr(args, "jobs", None),
        split_k=getattr(args, "k", None),
        split_seed=getattr(args, "seed", None),
        val_fold=getattr(args, "val_fold", None),
        iou_threshold=getattr(args, "iou_threshold", None),
        rebin_factor=getattr(args, "rebin_factor", None),
    )
    if getattr(args, "no_fusion", False):
        overrides["fusion"] = False
    if getattr(args, "class_agnostic", False):
        overrides["class_aware"] = False
    return apply_overrides(cfg, **overrides)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    log.info("wrote %s", path)


def _finish(out: Path, errors: list[dict]) -> int:
    if errors:
        _write(out / "errors.json", json.dumps(errors, indent=1) + "\n")
        for err in errors:
            log.error("%s: %s", err["item"], err["error"])
        return 1
    return 0


def _read_frame(path: Path):
    if path.suffix.lower() in (".fits", ".fit", ".fts"):
        return read_fits(path.read_bytes())
    return read_png_grayscale(path.read_bytes())


def cmd_preprocess(args) -> int:
    cfg = _load_run_config(args)
    if not cfg.images:
        raise SystemExit("preprocess: --images (or config images:) is required")
    out = _outdir(cfg)
    frames = sorted(
        p
        for p in Path(cfg.images).iterdir()
        if p.suffix.lower() in (".fits", ".fit", ".fts", ".png")
    )
    manifest = []
    errors: list[dict] = []
    for path in frames:
        try:
            grid = _read_frame(path)
            grid = imgproc.rebin(grid, cfg.rebin_factor)
            z1, z2 = imgproc.zscale_limits(grid, cfg.zscale)
            stretched = imgproc.asinh_stretch(grid, z1, z2, cfg.stretch)
            eight = imgproc.to_eight_bit(stretched)
            target = out / (path.stem + ".png")
            target.write_bytes(imgproc.write_png_grayscale(eight))
            manifest.append(
                {
                    "file": path.name,
                    "output": target.name,
                    "z1": z1,
                    "z2": z2,
                    "width": eight.shape[1],
                    "height": eight.shape[0],
                }
            )
        except (FitsParseError, PngReadError, ValueError, OSError) as exc:
            errors.append({"item": path.name, "error": str(exc)})
    _write(out / "manifest.json", json.dumps(manifest, indent=1) + "\n")
    print(f"preprocessed {len(manifest)}/{len(frames)} frames -> {out}")
    return _finish(out, errors)


def _load_gt(cfg: RunConfig) -> Dataset:
    if not cfg.gt:
        raise SystemExit("a ground-truth file is required (--gt or config gt:)")
    try:
        return parse_coco(Path(cfg.gt).read_bytes(), "groundtruth")
    except (CocoFormatError, OSError) as exc:
        raise SystemExit(f"cannot load ground truth {cfg.gt}: {exc}")


def cmd_split(args) -> int:
    cfg = _load_run_config(args)
    out = _outdir(cfg)
    ds = _load_gt(cfg)
    try:
        spec = splitmod.stratified_kfold(ds, cfg.split_k, cfg.split_seed)
    except ValueError as exc:
        raise SystemExit(f"split: {exc}")
    _write(out / "split_manifest.json", splitmod.split_manifest_json(spec))
    for fold in range(spec.k):
        fold_ds = annot.subset_dataset(ds, spec.fold_image_ids(fold))
        _write(out / f"fold_{fold}.json", serialize_coco(fold_ds) + "\n")

    shares = splitmod.fold_class_shares(ds, spec)
    header = "fold  images  masks " + " ".join(f"{c.name:>7}" for c in annot.CLASS_ORDER)
    print(header)
    by_image = ds.annotations_by_image()
    for f in range(spec.k):
        ids = spec.fold_image_ids(f)
        n_masks = sum(len(by_image[i]) for i in ids)
        row = " ".join(f"{shares[f][c.name]:6.2f}%" for c in annot.CLASS_ORDER)
        print(f"{f:>4}  {len(ids):>6}  {n_masks:>5} {row}")
    return 0


def cmd_stats(args) -> int:
    cfg = _load_run_config(args)
    out = _outdir(cfg)
    ds = _load_gt(cfg)
    table = dataset_stats(ds)

    lines = ["filter,central_wavelength_nm,width_nm,images,masks"]
    for row in table.per_filter:
        cw = "" if row.central_wavelength is None else f"{row.central_wavelength:g}"
        w = "" if row.width is None else f"{row.width:g}"
        lines.append(f"{row.filter_name},{cw},{w},{row.images},{row.masks}")
    lines.append(f"sum,,,{table.filter_image_sum},{table.total_masks}")
    _write(out / "stats_filters.csv", "\n".join(lines) + "\n")

    lines = ["class,count,percent"]
    for row in table.per_class:
        lines.append(f"{row.class_name},{row.count},{row.percent:.2f}")
    _write(out / "stats_classes.csv", "\n".join(lines) + "\n")

    lines = ["class,bbox_width,bbox_height"]
    for cls_name, w, h in table.bbox_sizes:
        lines.append(f"{cls_name},{w:.2f},{h:.2f}")
    _write(out / "bbox_sizes.csv", "\n".join(lines) + "\n")

    groups: dict[str, list[tuple[float, float]]] = {
        c.name: [] for c in annot.CLASS_ORDER
    }
    for cls_name, w, h in table.bbox_sizes:
        groups[cls_name].append((w, h))
    _write(
        out / "bbox_sizes.svg",
        scatter_plot_svg(
            groups,
            title="annotation bbox sizes by class",
            xlabel="width (px)", ylabel="height (px)",
        ),
    )

    print(f"images: {table.total_images} (per-filter sum {table.filter_image_sum})")
    if table.declared_image_count is not None:
        print(
            f"declared image count: {table.declared_image_count} "
            f"(discrepancy {table.declared_discrepancy:+d}; reported, not corrected)"
        )
    print(f"masks: {table.total_masks}")
    print(f"{'filter':<7} {'images':>7} {'masks':>7}")
    for row in table.per_filter:
        print(f"{row.filter_name:<7} {row.images:>7} {row.masks:>7}")
    print(f"{'class':<6} {'count':>6} {'share':>8}")
    for row in table.per_class:
        print(f"{row.class_name:<6} {row.count:>6} {row.percent:>7.2f}%")
    return 0


def _apply_fusion(cfg: RunConfig, gt: Dataset, preds: Dataset, errors: list[dict]) -> Dataset:
    """Swap faint star-loop/other segmenter masks for their bbox rectangles."""
    if not cfg.images:
        log.info("fusion disabled: no images directory configured")
        return preds
    images_dir = Path(cfg.images)
    by_image = preds.annotations_by_image()
    replaced: dict[int, annot.Annotation] = {}
    for im in gt.images:
        anns = by_image.get(im.id, [])
        if not any(a.cls in FUSION_CLASSES for a in anns):
            continue
        path = images_dir / im.file_name
        try:
            grid = _read_frame(path)
        except (FitsParseError, PngReadError, ValueError, OSError) as exc:
            errors.append({"item": im.file_name, "error": f"fusion skipped: {exc}"})
            continue
        bg = background_stats(grid)
        for ann_ in anns:
            if ann_.cls not in FUSION_CLASSES:
                continue
            detector = annot.rect_mask(ann_.bbox)
            fused = fuse_masks(detector, ann_.mask, ann_.cls, grid, bg)
            if fused is not ann_.mask:
                new_ann = annot.Annotation(
                    ann_.id, ann_.image_id, ann_.cls, fused,
                    annot.bbox_of(fused), annot.mask_area(fused), ann_.score,
                )
                replaced[id(ann_)] = new_ann
    if not replaced:
        return preds
    out_annotations = [replaced.get(id(a), a) for a in preds.annotations]
    return Dataset(
        list(preds.images), out_annotations, None, dict(preds.category_id_to_class)
    )


def cmd_eval(args) -> int:
    cfg = _load_run_config(args)
    out = _outdir(cfg)
    gt = _load_gt(cfg)
    if not cfg.preds:
        raise SystemExit("eval: a predictions file is required (--preds or config preds:)")
    try:
        preds = parse_coco(Path(cfg.preds).read_bytes(), "predictions", reference=gt)
    except (CocoFormatError, OSError) as exc:
        raise SystemExit(f"cannot load predictions {cfg.preds}: {exc}")

    errors: list[dict] = []
    if cfg.fusion:
        preds = _apply_fusion(cfg, gt, preds, errors)

    matches = match_dataset(
        gt, preds, cfg.iou_threshold, cfg.class_aware, jobs=cfg.jobs
    )
    _write(out / "matches.jsonl", matches_to_jsonl(matches))

    report = metrics.build_report(
        gt, preds, matches,
        iou_threshold=cfg.iou_threshold, class_aware=cfg.class_aware,
    )
    _write(out / "report.csv", metrics.report_csv(report))
    _write(out / "report.json", metrics.report_json(report))
    _write(out / "iou_cdf.csv", metrics.iou_cdf_csv(report))
    _write(out / "iou_cdf.svg", metrics.iou_cdf_svg(report))
    _write(out / "per_image_iou.csv", metrics.per_image_iou_csv(report))
    print(metrics.format_report_table(report))
    return _finish(out, errors)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xami",
        description="artefact-detection evaluation toolkit for OM full frames",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML/JSON config file")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("preprocess", help="rebin + zscale + asinh -> 8-bit PNGs")
    common(p)
    p.add_argument("--images", help="directory of FITS/PNG frames")
    p.add_argument("--rebin-factor", type=int, dest="rebin_factor")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("split", help="stratified k-fold over a ground-truth file")
    common(p)
    p.add_argument("--gt", help="ground-truth COCO JSON")
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("eval", help="match predictions and build the metrics report")
    common(p)
    p.add_argument("--gt", help="ground-truth COCO JSON")
    p.add_argument("--preds", help="predictions results JSON")
    p.add_argument("--images", help="frames dir (enables faint-mask fusion)")
    p.add_argument("--iou-threshold", type=float, dest="iou_threshold")
    p.add_argument("--val-fold", type=int, dest="val_fold")
    p.add_argument("--no-fusion", action="store_true", dest="no_fusion")
    p.add_argument(
        "--class-agnostic", action="store_true", dest="class_agnostic",
        help="match across classes instead of within",
    )
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="dataset tallies and bbox size scatter")
    common(p)
    p.add_argument("--gt", help="ground-truth COCO JSON")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        raise SystemExit(f"config error: {exc}")


if __name__ == "__main__":
    sys.exit(main())
