"""Frame preprocessing: PNG ingestion, rebinning, ZScale limits, Asinh stretch.

Pixel grids are plain (height, width) float64 numpy arrays, row-major,
origin top-left. All functions are pure; batch callers may parallelize
per image.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

# Observing filter physics: central wavelength and width in nm.
# Single-letter aliases are the lenticular short codes (L/M/S/W).


@dataclass(frozen=True)
class FilterBand:
    name: str
    central_wavelength: float
    width: float


FILTER_BANDS = {
    "V": FilterBand("V", 543, 70),
    "B": FilterBand("B", 450, 105),
    "U": FilterBand("U", 344, 84),
    "UVW1": FilterBand("UVW1", 291, 83),
    "UVM2": FilterBand("UVM2", 231, 48),
    "UVW2": FilterBand("UVW2", 212, 50),
    "White": FilterBand("White", 406, 347),
}

FILTER_ALIASES = {"L": "UVW1", "M": "UVM2", "S": "UVW2", "W": "White"}


def filter_band(name: str) -> FilterBand:
    """Resolve a filter name or alias; unknown names are rejected."""
    key = FILTER_ALIASES.get(name, name)
    band = FILTER_BANDS.get(key)
    if band is None:
        raise ValueError(f"unknown filter band {name!r}")
    return band


@dataclass(frozen=True)
class ZScaleParams:
    """Display-limit estimation parameters (de-facto standard defaults)."""

    n_samples: int = 1000
    contrast: float = 0.25
    max_reject_fraction: float = 0.5
    min_pixels: int = 5
    k_rej: float = 2.5
    max_iterations: int = 5

    def __post_init__(self):
        if not 0.0 < self.contrast <= 1.0:
            raise ValueError(f"contrast must be in (0, 1], got {self.contrast}")
        if not self.n_samples >= self.min_pixels >= 1:
            raise ValueError(
                f"need n_samples >= min_pixels >= 1, got "
                f"{self.n_samples} / {self.min_pixels}"
            )
        if self.k_rej <= 0:
            raise ValueError(f"k_rej must be positive, got {self.k_rej}")


@dataclass(frozen=True)
class StretchParams:
    """Asinh softening; smaller a boosts the faint end harder."""

    a: float = 0.1

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"softening a must be positive, got {self.a}")


class PngReadError(ValueError):
    """Corrupt stream or unsupported color type."""


# ITU-R 601 luma weights, applied in float so no rounding sneaks in
_LUMA = (0.299, 0.587, 0.114)


def read_png_grayscale(data: bytes) -> np.ndarray:
    """Decode a PNG into a float64 grid.

    8-bit images land in [0, 255], 16-bit in [0, 65535]. RGB(A) inputs are
    reduced by luminance 0.299 R + 0.587 G + 0.114 B without rounding;
    palette images are expanded first; alpha is ignored.
    """
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise PngReadError(f"cannot decode PNG stream: {exc}") from exc

    mode = img.mode
    if mode == "P":
        img = img.convert("RGB")
        mode = "RGB"
    if mode == "1":
        return np.asarray(img, dtype=np.float64) * 255.0
    if mode in ("L", "I;16", "I;16B", "I", "I;16L", "F"):
        return np.asarray(img, dtype=np.float64)
    if mode == "LA":
        return np.asarray(img, dtype=np.float64)[:, :, 0]
    if mode in ("RGB", "RGBA"):
        arr = np.asarray(img, dtype=np.float64)
        r, g, b = arr[:, :, 0], arr[:, :, 1], arr[:, :, 2]
        return _LUMA[0] * r + _LUMA[1] * g + _LUMA[2] * b
    raise PngReadError(f"unsupported PNG color mode {mode!r}")


def write_png_grayscale(grid: np.ndarray) -> bytes:
    """Encode an integral [0, 255] grid as 8-bit grayscale PNG bytes."""
    arr = np.asarray(grid, dtype=np.float64)
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("grid values must be in [0, 255] for 8-bit output")
    buf = io.BytesIO()
    Image.fromarray(arr.astype(np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def rebin(grid: np.ndarray, factor: int) -> np.ndarray:
    """Block-average a grid by an integer factor.

    Uses the mean (not the sum) so the intensity scale is preserved and
    the same ZScale parameters stay meaningful before and after rebinning.
    Dimensions must divide evenly.
    """
    arr = np.asarray(grid, dtype=np.float64)
    if factor < 1:
        raise ValueError(f"rebin factor must be >= 1, got {factor}")
    h, w = arr.shape
    if h % factor or w % factor:
        raise ValueError(f"grid {w}x{h} not divisible by rebin factor {factor}")
    if factor == 1:
        return arr.copy()
    return arr.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def _fit_line(x: np.ndarray, y: np.ndarray, good: np.ndarray) -> tuple[float, float]:
    """Least-squares (intercept, slope) of y against x over good samples."""
    xg = x[good]
    yg = y[good]
    xm = xg.mean()
    ym = yg.mean()
    dx = xg - xm
    var = float((dx * dx).sum())
    if var == 0.0:
        return float(ym), 0.0
    slope = float((dx * (yg - ym)).sum()) / var
    return float(ym - slope * xm), slope


def zscale_limits(
    grid: np.ndarray, params: ZScaleParams = ZScaleParams()
) -> tuple[float, float]:
    """Estimate display limits (z1, z2) from a sorted-sample line fit.

    Procedure (frozen; the test oracle mirrors it independently):
    take up to n_samples finite pixels on an even stride over the
    row-major flattened grid, sort them, and fit value-vs-rank by least
    squares with iterative k_rej-sigma rejection of residuals (population
    sigma; rejected neighborhoods grow by +-1 sample), for at most
    max_iterations rounds or until more than max_reject_fraction of the
    samples is gone. With median m, midpoint index (n-1)/2 and final
    slope s:

        z1 = max(min_sample, m - midpoint * s / contrast)
        z2 = min(max_sample, m + (n - midpoint) * s / contrast)

    A degenerate fit (too few survivors or zero slope) falls back to the
    full sample range.
    """
    flat = np.asarray(grid, dtype=np.float64).ravel()
    finite = flat[np.isfinite(flat)]
    if finite.size < params.min_pixels:
        raise ValueError(
            f"need at least {params.min_pixels} finite pixels, got {finite.size}"
        )
    stride = max(1, finite.size // params.n_samples)
    samples = np.sort(finite[::stride][: params.n_samples])
    n = samples.size

    min_s = float(samples[0])
    max_s = float(samples[-1])
    if min_s == max_s:
        return min_s, max_s

    median = float(np.median(samples))
    midpoint = (n - 1) / 2.0
    x = np.arange(n, dtype=np.float64)
    good = np.ones(n, dtype=bool)
    min_good = max(params.min_pixels, math.ceil(n * (1.0 - params.max_reject_fraction)))

    for _ in range(params.max_iterations):
        if good.sum() < 2:
            return min_s, max_s
        intercept, slope = _fit_line(x, samples, good)
        resid = samples - (intercept + slope * x)
        sigma = float(resid[good].std())
        if sigma <= 0.0:
            break
        new_bad = good & (np.abs(resid) > params.k_rej * sigma)
        if not new_bad.any():
            break
        bad = ~good | new_bad
        grown = bad.copy()
        grown[:-1] |= bad[1:]
        grown[1:] |= bad[:-1]
        good = ~grown
        if int(good.sum()) < min_good:
            return min_s, max_s

    if good.sum() < 2:
        return min_s, max_s
    _, slope = _fit_line(x, samples, good)
    if slope <= 0.0:
        return min_s, max_s

    spread = slope / params.contrast
    z1 = max(min_s, median - midpoint * spread)
    z2 = min(max_s, median + (n - midpoint) * spread)
    return float(z1), float(z2)


def asinh_stretch(
    grid: np.ndarray, z1: float, z2: float, params: StretchParams = StretchParams()
) -> np.ndarray:
    """Map intensities through asinh(x/a)/asinh(1/a) after [z1, z2] scaling.

    Output is in [0, 1] and monotone in the input; z1 == z2 degenerates to
    an all-zero frame.
    """
    if not (math.isfinite(z1) and math.isfinite(z2)):
        raise ValueError(f"non-finite limits z1={z1}, z2={z2}")
    if z2 < z1:
        raise ValueError(f"need z2 >= z1, got z1={z1}, z2={z2}")
    arr = np.asarray(grid, dtype=np.float64)
    if z1 == z2:
        return np.zeros_like(arr)
    xn = np.clip((arr - z1) / (z2 - z1), 0.0, 1.0)
    return np.arcsinh(xn / params.a) / math.asinh(1.0 / params.a)


def to_eight_bit(grid: np.ndarray) -> np.ndarray:
    """Quantize a [0, 1] grid to integral [0, 255] values.

    Rounds half away from zero so golden files are stable across platforms.
    """
    arr = np.asarray(grid, dtype=np.float64)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("input values must lie in [0, 1]")
    return np.floor(arr * 255.0 + 0.5)
