"""Hand-rolled SVG plots: text-based, byte-stable, diffable in tests."""

from __future__ import annotations

import math

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(1, n - 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * abs(step):
        ticks.append(round(t, 12))
        t += step
    return ticks or [lo]


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".") or "0"


class _Canvas:
    def __init__(self, title, xlabel, ylabel, xlim, ylim):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_W // 2}" y="24" text-anchor="middle" '
            f'font-family="monospace" font-size="16">{title}</text>',
        ]
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self._frame(xlabel, ylabel)

    def px(self, x: float) -> float:
        return _ML + (x - self.x0) / (self.x1 - self.x0) * (_W - _ML - _MR)

    def py(self, y: float) -> float:
        return _H - _MB - (y - self.y0) / (self.y1 - self.y0) * (_H - _MT - _MB)

    def _frame(self, xlabel, ylabel):
        p = self.parts
        p.append(
            f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
            f'height="{_H - _MT - _MB}" fill="none" stroke="black"/>'
        )
        for t in _ticks(self.x0, self.x1):
            x = self.px(t)
            p.append(
                f'<line x1="{x:.2f}" y1="{_H - _MB}" x2="{x:.2f}" '
                f'y2="{_H - _MB + 5}" stroke="black"/>'
            )
            p.append(
                f'<text x="{x:.2f}" y="{_H - _MB + 18}" text-anchor="middle" '
                f'font-family="monospace" font-size="11">{_fmt(t)}</text>'
            )
        for t in _ticks(self.y0, self.y1):
            y = self.py(t)
            p.append(
                f'<line x1="{_ML - 5}" y1="{y:.2f}" x2="{_ML}" y2="{y:.2f}" '
                f'stroke="black"/>'
            )
            p.append(
                f'<text x="{_ML - 8}" y="{y + 4:.2f}" text-anchor="end" '
                f'font-family="monospace" font-size="11">{_fmt(t)}</text>'
            )
        p.append(
            f'<text x="{(_ML + _W - _MR) // 2}" y="{_H - 12}" text-anchor="middle" '
            f'font-family="monospace" font-size="13">{xlabel}</text>'
        )
        p.append(
            f'<text x="16" y="{(_MT + _H - _MB) // 2}" text-anchor="middle" '
            f'font-family="monospace" font-size="13" '
            f'transform="rotate(-90 16 {(_MT + _H - _MB) // 2})">{ylabel}</text>'
        )

    def finish(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def line_plot_svg(
    xs, ys, *, title: str, xlabel: str, ylabel: str,
    xlim=None, ylim=None,
) -> str:
    """A single polyline over framed axes."""
    xs = list(xs)
    ys = list(ys)
    if xlim is None:
        xlim = (min(xs, default=0.0), max(xs, default=1.0))
    if ylim is None:
        ylim = (min(ys, default=0.0), max(ys, default=1.0))
    cv = _Canvas(title, xlabel, ylabel, xlim, ylim)
    pts = " ".join(f"{cv.px(x):.2f},{cv.py(y):.2f}" for x, y in zip(xs, ys))
    cv.parts.append(
        f'<polyline points="{pts}" fill="none" stroke="{PALETTE[0]}" '
        f'stroke-width="1.5"/>'
    )
    return cv.finish()


def scatter_plot_svg(
    groups: dict[str, list[tuple[float, float]]], *, title: str,
    xlabel: str, ylabel: str,
) -> str:
    """One dot series per labelled group, with a legend."""
    all_x = [x for pts in groups.values() for x, _ in pts]
    all_y = [y for pts in groups.values() for _, y in pts]
    xlim = (0.0, max(all_x, default=1.0) * 1.05)
    ylim = (0.0, max(all_y, default=1.0) * 1.05)
    cv = _Canvas(title, xlabel, ylabel, xlim, ylim)
    for i, (label, pts) in enumerate(groups.items()):
        color = PALETTE[i % len(PALETTE)]
        for x, y in pts:
            cv.parts.append(
                f'<circle cx="{cv.px(x):.2f}" cy="{cv.py(y):.2f}" r="2" '
                f'fill="{color}" fill-opacity="0.6"/>'
            )
        ly = _MT + 16 + i * 16
        cv.parts.append(
            f'<circle cx="{_W - _MR - 120}" cy="{ly - 4}" r="4" fill="{color}"/>'
        )
        cv.parts.append(
            f'<text x="{_W - _MR - 110}" y="{ly}" font-family="monospace" '
            f'font-size="12">{label}</text>'
        )
    return cv.finish()
