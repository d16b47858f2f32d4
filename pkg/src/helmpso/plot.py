"""Minimal SVG line charts (polylines, axes, legend).

Output depends only on the data, so reruns give identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"]
DASHES = ["", "6,3", "2,2", "8,3,2,3"]

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 78, 20, 36, 52


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def _fmt(v):
    return f"{v:.4g}"


def line_chart(path, series, title="", xlabel="", ylabel="", logy=False) -> None:
    """Write ``series`` (list of ``(label, x, y)``) as an SVG line chart.

    With ``logy`` non-positive values are dropped and the axis shows log10.
    """
    prepared = []
    for label, x, y in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logy:
            keep &= y > 0
            y = np.where(keep, np.log10(np.where(y > 0, y, 1.0)), np.nan)
        prepared.append((label, x[keep], y[keep]))
    xs = np.concatenate([p[1] for p in prepared]) if prepared else np.zeros(0)
    ys = np.concatenate([p[2] for p in prepared]) if prepared else np.zeros(0)
    if xs.size == 0:
        xs, ys = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return TOP + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{TOP + ph}" x2="{X:.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(
            f'<text x="{X:.2f}" y="{TOP + ph + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    for t in _ticks(y0, y1):
        Y = py(t)
        lab = f"1e{_fmt(t)}" if logy else _fmt(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{Y:.2f}" x2="{LEFT}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<line x1="{LEFT}" y1="{Y:.2f}" x2="{LEFT + pw}" y2="{Y:.2f}" stroke="#e0e0e0"/>')
        out.append(
            f'<text x="{LEFT - 8}" y="{Y + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="11">{lab}</text>'
        )
    out.append(
        f'<text x="{LEFT + pw / 2:.1f}" y="{H - 12}" text-anchor="middle" font-family="sans-serif" font-size="13">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(ylabel + (" (log10)" if logy else ""))}</text>'
    )
    for i, (label, x, y) in enumerate(prepared):
        color = COLORS[i % len(COLORS)]
        dash = DASHES[(i // len(COLORS)) % len(DASHES)] or DASHES[i % len(DASHES)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        style = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"{style}/>')
        ly = TOP + 16 + 16 * i
        lx = LEFT + pw - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="2"{style}/>')
        out.append(f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
