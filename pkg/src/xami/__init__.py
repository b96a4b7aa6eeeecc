"""Artefact-detection evaluation toolkit for OM full-frame imagery.

Library layout:
    imgproc    frame ingestion, rebinning, ZScale limits, Asinh stretch
    fitsio     minimal single-HDU FITS reader
    annot      masks, annotations, COCO-style IO, dataset statistics
    split      stratified k-fold over image label multisets
    assignment Kuhn-Munkres optimal assignment
    matching   IoU matching, background stats, faint-mask fusion
    metrics    precision/recall, IoU distributions, loss diagnostics
    refdata    synthetic corpus with the published tallies
    cli        the `xami` command
"""

__version__ = "0.1.0"

from .annot import (  # noqa: F401
    Annotation,
    ArtefactClass,
    BitmapMask,
    Dataset,
    ImageRecord,
    PolygonMask,
    RleMask,
    bbox_of,
    dataset_stats,
    parse_coco,
    rasterize,
    rle_decode,
    rle_encode,
    serialize_coco,
)
from .assignment import kuhn_munkres  # noqa: F401
from .fitsio import read_fits  # noqa: F401
from .imgproc import (  # noqa: F401
    FilterBand,
    StretchParams,
    ZScaleParams,
    asinh_stretch,
    filter_band,
    read_png_grayscale,
    rebin,
    to_eight_bit,
    zscale_limits,
)
from .matching import (  # noqa: F401
    BackgroundStats,
    MatchResult,
    background_stats,
    fuse_masks,
    iou,
    is_faint,
    match_dataset,
    match_instances,
)
from .metrics import (  # noqa: F401
    ConfusionCounts,
    MetricsReport,
    build_report,
    combined_loss,
    dice_loss,
    focal_loss,
    iou_distribution,
    precision_recall,
)
from .split import SplitSpec, materialize_split, stratified_kfold  # noqa: F401
