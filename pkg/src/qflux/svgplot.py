"""Self-contained SVG 1.1 emission: log-log convergence plots and heatmaps."""
from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

W, H = 480, 360
ML, MR, MT, MB = 70, 20, 40, 50


def _header(title: str) -> list:
    return ['<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="14">'
            f'{escape(title)}</text>']


def _ticks(lo, hi):
    a, b = math.floor(lo), math.ceil(hi)
    if b - a < 1:
        b = a + 1
    return list(range(a, b + 1))


def loglog(xs: Sequence[float], ys: Sequence[float], yerr: Optional[Sequence[float]] = None,
           slope: Optional[float] = None, title: str = "", xlabel: str = "h", ylabel: str = "error") -> str:
    """Points with optional symmetric error bars; slope is annotated to 3 decimals."""
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    err = np.zeros_like(ys) if yerr is None else np.nan_to_num(np.asarray(yerr, float))
    pos = ys > 0
    lx = np.log10(xs[pos])
    ly = np.log10(ys[pos])
    lo_y = np.log10(np.maximum(ys[pos] - err[pos], ys[pos] * 1e-3))
    hi_y = np.log10(ys[pos] + err[pos])
    x0, x1 = _ticks(lx.min(), lx.max())[0], _ticks(lx.min(), lx.max())[-1]
    yt = _ticks(min(lo_y.min(), ly.min()), max(hi_y.max(), ly.max()))
    y0, y1 = yt[0], yt[-1]

    def px(v):
        return ML + (v - x0) / (x1 - x0) * (W - ML - MR)

    def py(v):
        return H - MB - (v - y0) / (y1 - y0) * (H - MT - MB)

    out = _header(title)
    out.append(f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MT - MB}" fill="none" stroke="black"/>')
    for t in range(x0, x1 + 1):
        out.append(f'<text x="{px(t):.1f}" y="{H - MB + 16}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">1e{t}</text>')
    for t in yt:
        out.append(f'<text x="{ML - 6}" y="{py(t) + 4:.1f}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">1e{t}</text>')
    for a, b, l, u in zip(lx, ly, lo_y, hi_y):
        out.append(f'<line x1="{px(a):.2f}" y1="{py(l):.2f}" x2="{px(a):.2f}" y2="{py(u):.2f}" stroke="gray"/>')
        out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3.5" fill="steelblue"/>')
    if len(lx) > 1:
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in sorted(zip(lx, ly)))
        out.append(f'<polyline points="{pts}" fill="none" stroke="steelblue"/>')
    if slope is not None and math.isfinite(slope):
        out.append(f'<text x="{W - MR - 6}" y="{MT + 16}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="12">slope {slope:.3f}</text>')
    out.append(f'<text x="{(ML + W - MR) / 2:.1f}" y="{H - 12}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(MT + H - MB) / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12" transform="rotate(-90 16 {(MT + H - MB) / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(x: Sequence[float], y: Sequence[float], Z, title: str = "", xlabel: str = "x",
            ylabel: str = "xi") -> str:
    """Grayscale-to-blue heatmap, Z indexed [x, y]."""
    Z = np.asarray(Z, float)
    top = Z.max() if Z.size and Z.max() > 0 else 1.0
    nx, ny = Z.shape
    cw = (W - ML - MR) / nx
    ch = (H - MT - MB) / ny
    out = _header(title)
    for i in range(nx):
        for j in range(ny):
            t = Z[i, j] / top
            r = int(255 * (1 - t))
            g = int(255 * (1 - 0.6 * t))
            out.append(f'<rect x="{ML + i * cw:.2f}" y="{H - MB - (j + 1) * ch:.2f}" width="{cw + 0.05:.2f}" '
                       f'height="{ch + 0.05:.2f}" fill="rgb({r},{g},255)"/>')
    out.append(f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MT - MB}" fill="none" stroke="black"/>')
    out.append(f'<text x="{ML}" y="{H - MB + 16}" font-family="sans-serif" font-size="11">{x[0]:.2f}</text>')
    out.append(f'<text x="{W - MR}" y="{H - MB + 16}" text-anchor="end" font-family="sans-serif" '
               f'font-size="11">{x[-1]:.2f}</text>')
    out.append(f'<text x="{ML - 6}" y="{H - MB}" text-anchor="end" font-family="sans-serif" '
               f'font-size="11">{y[0]:.2f}</text>')
    out.append(f'<text x="{ML - 6}" y="{MT + 10}" text-anchor="end" font-family="sans-serif" '
               f'font-size="11">{y[-1]:.2f}</text>')
    out.append(f'<text x="{(ML + W - MR) / 2:.1f}" y="{H - 12}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(MT + H - MB) / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12" transform="rotate(-90 16 {(MT + H - MB) / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
