"""Dependency-free SVG emission for log-log error plots.

Output is a plain static plot (polyline per moment order plus a slope-1/2
guide line) written deterministically, so plot files are byte-stable for a
given report.
"""

from __future__ import annotations

import math

_W, _H = 640, 480
_ML, _MR, _MT, _MB = 70, 20, 20, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _ticks(lo: float, hi: float) -> list[int]:
    return list(range(math.ceil(lo), math.floor(hi) + 1))


def svg_loglog(series: dict[str, list[tuple[float, float]]], guide_slope: float = 0.5) -> str:
    """Render log10-log10 series {label: [(x, y), ...]} with a guide line."""
    pts = [(x, y) for s in series.values() for x, y in s if x > 0 and y > 0]
    if not pts:
        raise ValueError("nothing to plot")
    lx = [math.log10(x) for x, _ in pts]
    ly = [math.log10(y) for _, y in pts]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly), max(ly)
    x0, x1 = x0 - 0.1, x1 + 0.1
    y0, y1 = y0 - 0.2, y1 + 0.2

    def sx(v):
        return _ML + (v - x0) / (x1 - x0) * (_W - _ML - _MR)

    def sy(v):
        return _H - _MB - (v - y0) / (y1 - y0) * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
        'fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(
            f'<line x1="{sx(t):.1f}" y1="{_H-_MB}" x2="{sx(t):.1f}" y2="{_H-_MB+5}" stroke="black"/>'
            f'<text x="{sx(t):.1f}" y="{_H-_MB+18}" font-size="11" text-anchor="middle">1e{t}</text>'
        )
    for t in _ticks(y0, y1):
        out.append(
            f'<line x1="{_ML-5}" y1="{sy(t):.1f}" x2="{_ML}" y2="{sy(t):.1f}" stroke="black"/>'
            f'<text x="{_ML-8}" y="{sy(t)+4:.1f}" font-size="11" text-anchor="end">1e{t}</text>'
        )
    out.append(
        f'<text x="{(_ML+_W-_MR)/2}" y="{_H-12}" font-size="12" text-anchor="middle">'
        "step size</text>"
    )
    out.append(
        f'<text x="16" y="{(_MT+_H-_MB)/2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {(_MT+_H-_MB)/2})">strong error</text>'
    )
    # guide line through the plot center with the reference slope
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    gx0, gx1 = x0 + 0.1, x1 - 0.1
    out.append(
        f'<line x1="{sx(gx0):.1f}" y1="{sy(cy + guide_slope*(gx0-cx)):.1f}" '
        f'x2="{sx(gx1):.1f}" y2="{sy(cy + guide_slope*(gx1-cx)):.1f}" '
        'stroke="#888" stroke-dasharray="6,4"/>'
    )
    out.append(
        f'<text x="{sx(gx1):.1f}" y="{sy(cy + guide_slope*(gx1-cx))-6:.1f}" '
        f'font-size="11" text-anchor="end" fill="#666">slope {guide_slope:g}</text>'
    )
    for i, (label, data) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(
            f"{sx(math.log10(x)):.1f},{sy(math.log10(y)):.1f}" for x, y in data if x > 0 and y > 0
        )
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in data:
            if x > 0 and y > 0:
                out.append(
                    f'<circle cx="{sx(math.log10(x)):.1f}" cy="{sy(math.log10(y)):.1f}" '
                    f'r="3" fill="{color}"/>'
                )
        out.append(
            f'<text x="{_W-_MR-8}" y="{_MT+16+14*i}" font-size="12" text-anchor="end" '
            f'fill="{color}">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
