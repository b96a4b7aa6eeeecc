"""Run configuration: one declarative file, every default overridable.

YAML (or JSON, which YAML subsumes) tree with the groups below; CLI flags
override file values, file values override defaults.

    images: path/to/frames
    gt: annotations.json
    preds: results.json
    out: outdir
    jobs: 1
    rebin: {factor: 4}
    zscale: {n_samples: 1000, contrast: 0.25, k_rej: 2.5,
             max_iterations: 5, max_reject_fraction: 0.5, min_pixels: 5}
    stretch: {a: 0.1}
    split: {k: 4, seed: 0, val_fold: 0}
    matching: {iou_threshold: 0.5, class_aware: true, fusion: true}
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .imgproc import StretchParams, ZScaleParams


@dataclass
class RunConfig:
    images: str | None = None
    gt: str | None = None
    preds: str | None = None
    out: str = "xami_out"
    jobs: int = 1
    rebin_factor: int = 4
    zscale: ZScaleParams = field(default_factory=ZScaleParams)
    stretch: StretchParams = field(default_factory=StretchParams)
    split_k: int = 4
    split_seed: int = 0
    val_fold: int = 0
    iou_threshold: float = 0.5
    class_aware: bool = True
    fusion: bool = True


class ConfigError(ValueError):
    pass


def _take(group: dict, key: str, cast, default):
    value = group.get(key, default)
    try:
        return cast(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value {key}={value!r}: {exc}") from None


def load_config(path: str | Path) -> RunConfig:
    """Parse a YAML/JSON config file into a RunConfig."""
    text = Path(path).read_text()
    doc = yaml.safe_load(text)
    if doc is None:
        return RunConfig()
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")

    known = {
        "images", "gt", "preds", "out", "jobs",
        "rebin", "zscale", "stretch", "split", "matching",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    cfg = RunConfig()
    for key in ("images", "gt", "preds", "out"):
        if doc.get(key) is not None:
            cfg = replace(cfg, **{key: str(doc[key])})
    if doc.get("jobs") is not None:
        cfg = replace(cfg, jobs=_take(doc, "jobs", int, 1))

    rebin = doc.get("rebin") or {}
    cfg = replace(cfg, rebin_factor=_take(rebin, "factor", int, cfg.rebin_factor))

    zs = doc.get("zscale") or {}
    zdefaults = ZScaleParams()
    try:
        cfg = replace(
            cfg,
            zscale=ZScaleParams(
                n_samples=_take(zs, "n_samples", int, zdefaults.n_samples),
                contrast=_take(zs, "contrast", float, zdefaults.contrast),
                max_reject_fraction=_take(
                    zs, "max_reject_fraction", float, zdefaults.max_reject_fraction
                ),
                min_pixels=_take(zs, "min_pixels", int, zdefaults.min_pixels),
                k_rej=_take(zs, "k_rej", float, zdefaults.k_rej),
                max_iterations=_take(zs, "max_iterations", int, zdefaults.max_iterations),
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"zscale: {exc}") from None

    st = doc.get("stretch") or {}
    try:
        cfg = replace(cfg, stretch=StretchParams(a=_take(st, "a", float, 0.1)))
    except ValueError as exc:
        raise ConfigError(f"stretch: {exc}") from None

    sp = doc.get("split") or {}
    cfg = replace(
        cfg,
        split_k=_take(sp, "k", int, cfg.split_k),
        split_seed=_take(sp, "seed", int, cfg.split_seed),
        val_fold=_take(sp, "val_fold", int, cfg.val_fold),
    )

    mt = doc.get("matching") or {}
    cfg = replace(
        cfg,
        iou_threshold=_take(mt, "iou_threshold", float, cfg.iou_threshold),
        class_aware=_take(mt, "class_aware", bool, cfg.class_aware),
        fusion=_take(mt, "fusion", bool, cfg.fusion),
    )
    return cfg


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply non-None CLI overrides on top of a config."""
    valid = {f.name for f in fields(RunConfig)}
    updates = {k: v for k, v in overrides.items() if v is not None}
    bad = set(updates) - valid
    if bad:
        raise ConfigError(f"unknown overrides: {sorted(bad)}")
    return replace(cfg, **updates)
