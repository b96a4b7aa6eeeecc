"""Independent reference implementations used as test oracles.

Deliberately coded with scalar Python (math/statistics, explicit loops),
not shared library code, so the vectorized implementations are checked
against a genuinely separate path.
"""

from __future__ import annotations

import itertools
import math
import struct


def reference_zscale(
    values,
    n_samples: int = 1000,
    contrast: float = 0.25,
    max_reject_fraction: float = 0.5,
    min_pixels: int = 5,
    k_rej: float = 2.5,
    max_iterations: int = 5,
) -> tuple[float, float]:
    """Textbook sorted-sample line-fit display limits, scalar arithmetic."""
    finite = [float(v) for v in values if math.isfinite(float(v))]
    if len(finite) < min_pixels:
        raise ValueError("too few finite values")
    stride = max(1, len(finite) // n_samples)
    samples = sorted(finite[::stride][:n_samples])
    n = len(samples)

    min_s, max_s = samples[0], samples[-1]
    if min_s == max_s:
        return min_s, max_s

    if n % 2:
        median = samples[n // 2]
    else:
        median = 0.5 * (samples[n // 2 - 1] + samples[n // 2])
    midpoint = (n - 1) / 2.0
    min_good = max(min_pixels, math.ceil(n * (1.0 - max_reject_fraction)))

    good = [True] * n

    def fit():
        xs = [i for i in range(n) if good[i]]
        ys = [samples[i] for i in xs]
        m = len(xs)
        xm = sum(xs) / m
        ym = sum(ys) / m
        var = sum((x - xm) ** 2 for x in xs)
        if var == 0.0:
            return ym, 0.0
        cov = sum((x - xm) * (y - ym) for x, y in zip(xs, ys))
        slope = cov / var
        return ym - slope * xm, slope

    for _ in range(max_iterations):
        if sum(good) < 2:
            return min_s, max_s
        intercept, slope = fit()
        resid = [samples[i] - (intercept + slope * i) for i in range(n)]
        good_resid = [resid[i] for i in range(n) if good[i]]
        mean_r = sum(good_resid) / len(good_resid)
        var_r = sum((r - mean_r) ** 2 for r in good_resid) / len(good_resid)
        sigma = math.sqrt(var_r)
        if sigma <= 0.0:
            break
        new_bad = [good[i] and abs(resid[i]) > k_rej * sigma for i in range(n)]
        if not any(new_bad):
            break
        bad = [not good[i] or new_bad[i] for i in range(n)]
        grown = list(bad)
        for i in range(n):
            if bad[i]:
                if i > 0:
                    grown[i - 1] = True
                if i < n - 1:
                    grown[i + 1] = True
        good = [not b for b in grown]
        if sum(good) < min_good:
            return min_s, max_s

    if sum(good) < 2:
        return min_s, max_s
    _, slope = fit()
    if slope <= 0.0:
        return min_s, max_s
    spread = slope / contrast
    z1 = max(min_s, median - midpoint * spread)
    z2 = min(max_s, median + (n - midpoint) * spread)
    return z1, z2


def brute_force_assignment_cost(matrix) -> float:
    """Exhaustive minimum assignment cost; rows <= cols or cols <= rows."""
    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    if rows == 0 or cols == 0:
        return 0.0
    if rows <= cols:
        return min(
            sum(matrix[r][perm[r]] for r in range(rows))
            for perm in itertools.permutations(range(cols), rows)
        )
    return min(
        sum(matrix[perm[c]][c] for c in range(cols))
        for perm in itertools.permutations(range(rows), cols)
    )


def shoelace(vertices) -> float:
    acc = 0.0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return abs(acc) / 2.0


def perimeter(vertices) -> float:
    total = 0.0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        total += math.hypot(x2 - x1, y2 - y1)
    return total


def _card(keyword: str, value) -> bytes:
    if isinstance(value, bool):
        text = f"{keyword:<8}= {'T' if value else 'F':>20}"
    elif isinstance(value, int):
        text = f"{keyword:<8}= {value:>20}"
    elif isinstance(value, float):
        text = f"{keyword:<8}= {value:>20.10E}"
    else:
        text = f"{keyword:<8}= '{value}'"
    return text.ljust(80).encode("ascii")


def write_fits(rows, bitpix: int = -64, bscale=None, bzero=None) -> bytes:
    """Minimal conformant FITS writer (independent of the package reader).

    rows: list of lists (row-major), written big-endian with struct.
    """
    height = len(rows)
    width = len(rows[0])
    header = b"".join(
        [
            _card("SIMPLE", True),
            _card("BITPIX", bitpix),
            _card("NAXIS", 2),
            _card("NAXIS1", width),
            _card("NAXIS2", height),
        ]
        + ([_card("BSCALE", bscale)] if bscale is not None else [])
        + ([_card("BZERO", bzero)] if bzero is not None else [])
        + [b"END".ljust(80)]
    )
    header += b" " * (-len(header) % 2880)

    fmt = {8: ">B", 16: ">h", 32: ">i", -32: ">f", -64: ">d"}[bitpix]
    payload = bytearray()
    for row in rows:
        for v in row:
            if bitpix > 0:
                payload += struct.pack(fmt, int(v))
            else:
                payload += struct.pack(fmt, float(v))
    payload += b"\x00" * (-len(payload) % 2880)
    return header + bytes(payload)


def scanline_reference_fill(vertices, h: int, w: int):
    """Per-pixel even-odd fill with scalar crossing counts (slow, simple)."""
    grid = [[False] * w for _ in range(h)]
    n = len(vertices)
    for r in range(h):
        yc = r + 0.5
        xs = []
        for i in range(n):
            x1, y1 = vertices[i]
            x2, y2 = vertices[(i + 1) % n]
            if y1 == y2:
                continue
            (ylo, xlo), (yhi, xhi) = sorted(((y1, x1), (y2, x2)))
            if ylo <= yc < yhi:
                xs.append(xlo + (yc - ylo) / (yhi - ylo) * (xhi - xlo))
        for c in range(w):
            xc = c + 0.5
            crossings = sum(1 for x in xs if x < xc)
            grid[r][c] = crossings % 2 == 1
    return grid
