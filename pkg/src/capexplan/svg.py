"""Hand-written SVG scatter/line charts for frontier plots (no plot stack)."""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

_WIDTH, _HEIGHT = 720, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 80, 160, 40, 60
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    value = start
    while value <= hi + 1e-12 * abs(hi):
        out.append(value)
        value += step
    return out or [lo]


def _fmt(value: float) -> str:
    return f"{value:.6G}"


def scatter_chart(
    series: Sequence[Tuple[str, List[Tuple[float, float]]]],
    x_label: str,
    y_label: str,
    title: str = "",
) -> str:
    """SVG markup for labelled (x, y) series drawn as connected markers."""
    points = [pt for _, pts in series for pt in pts]
    if not points:
        xs = ys = [0.0, 1.0]
    else:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_pad = (x_hi - x_lo) * 0.05 or max(abs(x_hi), 1.0) * 0.05
    y_pad = (y_hi - y_lo) * 0.05 or max(abs(y_hi), 1.0) * 0.05
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B
    sx = lambda x: _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w
    sy = lambda y: _MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{_WIDTH // 2}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>'
        )
    axis_y = _MARGIN_T + plot_h
    out.append(
        f'<line x1="{_MARGIN_L}" y1="{axis_y}" x2="{_MARGIN_L + plot_w}" '
        f'y2="{axis_y}" stroke="black"/>'
    )
    out.append(
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
        f'y2="{axis_y}" stroke="black"/>'
    )
    for tick in _ticks(x_lo, x_hi):
        px = sx(tick)
        out.append(
            f'<line x1="{px:.2f}" y1="{axis_y}" x2="{px:.2f}" '
            f'y2="{axis_y + 5}" stroke="black"/>'
        )
        out.append(
            f'<text x="{px:.2f}" y="{axis_y + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(tick)}</text>'
        )
    for tick in _ticks(y_lo, y_hi):
        py = sy(tick)
        out.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{py:.2f}" x2="{_MARGIN_L}" '
            f'y2="{py:.2f}" stroke="black"/>'
        )
        out.append(
            f'<text x="{_MARGIN_L - 8}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(tick)}</text>'
        )
    out.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.0f}" y="{_HEIGHT - 12}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">'
        f"{x_label}</text>"
    )
    out.append(
        f'<text x="18" y="{_MARGIN_T + plot_h / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {_MARGIN_T + plot_h / 2:.0f})">{y_label}</text>'
    )
    for i, (label, pts) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        ordered = sorted(pts)
        if len(ordered) > 1:
            path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in ordered)
            out.append(
                f'<polyline points="{path}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>'
            )
        for x, y in ordered:
            out.append(
                f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3.5" '
                f'fill="{color}"/>'
            )
        ly = _MARGIN_T + 16 + i * 18
        lx = _MARGIN_L + plot_w + 12
        out.append(
            f'<circle cx="{lx}" cy="{ly - 4}" r="4" fill="{color}"/>'
        )
        out.append(
            f'<text x="{lx + 10}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
