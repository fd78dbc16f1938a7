"""Tiny standalone SVG line-plot writer (no external assets, valid XML)."""
from __future__ import annotations

import math
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 55


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        return [lo]
    step = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(step))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= step), default=step)
    first = math.ceil(lo / step - 1e-9) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(round(t, 12))
        t += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def line_plot(series: Mapping[str, tuple], title: str = "", xlabel: str = "", ylabel: str = "",
              hlines: Sequence[tuple] = ()) -> str:
    """Render ``{label: (xs, ys)}`` as polylines; ``hlines`` is ``[(y, label), ...]``."""
    xs = [float(x) for pts in series.values() for x in pts[0]]
    ys = [float(y) for pts in series.values() for y in pts[1]] + [float(y) for y, _ in hlines]
    if not xs:
        raise ValueError("nothing to plot")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pad = 0.05 * (y1 - y0) if y1 > y0 else 0.5
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (y1 - y) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{_fmt(px(t))}" y1="{TOP + ph}" x2="{_fmt(px(t))}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{TOP + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{LEFT - 5}" y1="{_fmt(py(t))}" x2="{LEFT}" y2="{_fmt(py(t))}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_fmt(py(t) + 4)}" text-anchor="end">{t:g}</text>')
    for y, label in hlines:
        out.append(f'<line x1="{LEFT}" y1="{_fmt(py(y))}" x2="{LEFT + pw}" y2="{_fmt(py(y))}" '
                   f'stroke="gray" stroke-dasharray="6,4"/>')
        out.append(f'<text x="{LEFT + pw + 6}" y="{_fmt(py(y) + 4)}" fill="gray">{escape(str(label))}</text>')
    for i, (label, (sx, sy)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(float(a)))},{_fmt(py(float(b)))}" for a, b in zip(sx, sy))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = TOP + 20 + 18 * i
        out.append(f'<line x1="{LEFT + pw + 10}" y1="{ly}" x2="{LEFT + pw + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw + 35}" y="{ly + 4}">{escape(str(label))}</text>')
    if title:
        out.append(f'<text x="{W / 2:.1f}" y="{TOP - 14}" text-anchor="middle" font-size="14">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
