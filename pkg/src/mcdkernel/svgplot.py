"""Minimal log-log line charts written as plain SVG."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 40, 50


def _decades(lo, hi):
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if a == b:
        b += 1
    return a, b


def loglog_svg(series, title="", xlabel="d", ylabel="", dashed=()):
    """Render ``{label: (xs, ys)}`` on log-log axes; non-positive points are dropped."""
    clean = {}
    for name, (xs, ys) in series.items():
        pts = [(float(x), float(y)) for x, y in zip(xs, ys)
               if x is not None and y is not None and x > 0 and y > 0 and math.isfinite(y)]
        if pts:
            clean[name] = pts
    allx = [p[0] for pts in clean.values() for p in pts] or [1.0, 10.0]
    ally = [p[1] for pts in clean.values() for p in pts] or [1.0, 10.0]
    x0, x1 = _decades(min(allx), max(allx))
    y0, y1 = _decades(min(ally), max(ally))
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def sx(x):
        return LEFT + pw * (math.log10(x) - x0) / (x1 - x0)

    def sy(y):
        return TOP + ph * (1 - (math.log10(y) - y0) / (y1 - y0))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{LEFT + pw / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{escape(title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in range(x0, x1 + 1):
        x = sx(10.0 ** e)
        out.append(f'<line x1="{x:.1f}" y1="{TOP}" x2="{x:.1f}" y2="{TOP + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{x:.1f}" y="{TOP + ph + 16}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">1e{e}</text>')
    ystep = max(1, (y1 - y0) // 10)
    for e in range(y0, y1 + 1, ystep):
        y = sy(10.0 ** e)
        out.append(f'<line x1="{LEFT}" y1="{y:.1f}" x2="{LEFT + pw}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.1f}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">1e{e}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 12}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12" transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (name, pts) in enumerate(clean.items()):
        color = PALETTE[i % len(PALETTE)]
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        dash = ' stroke-dasharray="5,4"' if name in dashed else ""
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>')
        for x, y in pts:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" fill="{color}"/>')
        ly = TOP + 14 + 18 * i
        out.append(f'<line x1="{W - RIGHT + 12}" y1="{ly}" x2="{W - RIGHT + 34}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"{dash}/>')
        out.append(f'<text x="{W - RIGHT + 40}" y="{ly + 4}" font-family="sans-serif" font-size="11">'
                   f'{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_loglog(path, series, **kw):
    with open(path, "w") as fh:
        fh.write(loglog_svg(series, **kw))
