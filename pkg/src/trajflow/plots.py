"""Minimal SVG figures: line charts and trajectory overlays.

Every polyline carries ``data-series`` naming the CSV column it was drawn
from, so a figure can be checked against its data file.
"""

import math
from xml.sax.saxutils import escape, quoteattr

import numpy as np

W, H = 480, 320
PAD = 48
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _fmt(v):
    return f"{v:.2f}"


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def _label(v):
    return f"{v:.3g}"


def _frame(title, xlabel, ylabel):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="14" y="{H / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {H / 2})">{escape(ylabel)}</text>',
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
    ]


class _Scale:
    def __init__(self, xs, ys, logx=False):
        self.logx = logx
        xs = np.log10(xs) if logx else np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        self.x0, self.x1 = float(np.min(xs)), float(np.max(xs))
        self.y0, self.y1 = float(np.min(ys)), float(np.max(ys))
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 1, self.x1 + 1
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 1, self.y1 + 1

    def x(self, v):
        v = math.log10(v) if self.logx else v
        return PAD + (v - self.x0) / (self.x1 - self.x0) * (W - 2 * PAD)

    def y(self, v):
        return H - PAD - (v - self.y0) / (self.y1 - self.y0) * (H - 2 * PAD)


def line_chart(path, x, series, title="", xlabel="", ylabel="", logx=False):
    """``series`` maps column name to y values over the shared ``x``."""
    x = np.asarray(x, dtype=float)
    finite = [np.asarray(v, dtype=float) for v in series.values()]
    ys = np.concatenate(finite) if finite else np.zeros(1)
    ys = ys[np.isfinite(ys)]
    sc = _Scale(x, ys if ys.size else np.zeros(1), logx)
    out = _frame(title, xlabel, ylabel)
    for tv in _ticks(sc.y0, sc.y1):
        out.append(f'<text x="{PAD - 4}" y="{_fmt(sc.y(tv))}" text-anchor="end" font-size="10">{_label(tv)}</text>')
    xt = x if x.size <= 8 else np.asarray(_ticks(float(x.min()), float(x.max())))
    for tv in xt:
        out.append(
            f'<text x="{_fmt(sc.x(tv))}" y="{H - PAD + 14}" text-anchor="middle" font-size="10">{_label(tv)}</text>'
        )
    for i, (name, vals) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{_fmt(sc.x(a))},{_fmt(sc.y(b))}" for a, b in zip(x, vals) if np.isfinite(b))
        out.append(
            f"<polyline data-series={quoteattr(name)} fill=\"none\" stroke=\"{color}\" "
            f'stroke-width="1.5" points="{pts}"/>'
        )
        out.append(
            f'<text x="{W - PAD + 4}" y="{PAD + 14 * i}" font-size="10" fill="{color}">{escape(name)}</text>'
        )
    out.append("</svg>")
    _write(path, out)


def trajectory_overlay(path, samples, truth=None, walls=None, title=""):
    """Top-down view of ``[S, H, 2]`` samples over optional wall boxes
    ``(lo[N, 2], hi[N, 2])`` and a reference path."""
    samples = np.asarray(samples, dtype=float)
    pts = [samples.reshape(-1, 2)]
    if truth is not None:
        pts.append(np.asarray(truth, dtype=float))
    if walls is not None:
        pts += [walls[0], walls[1]]
    allp = np.concatenate(pts)
    sc = _Scale(allp[:, 0], allp[:, 1])
    out = _frame(title, "x", "y")
    if walls is not None:
        for lo, hi in zip(*walls):
            x0, x1 = sc.x(lo[0]), sc.x(hi[0])
            y0, y1 = sc.y(hi[1]), sc.y(lo[1])
            out.append(f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}" height="{_fmt(y1 - y0)}" fill="#bbb"/>')
    for i, s in enumerate(samples):
        p = " ".join(f"{_fmt(sc.x(a))},{_fmt(sc.y(b))}" for a, b in s)
        out.append(f'<polyline data-series="sample_{i}" fill="none" stroke="#1f77b4" stroke-opacity="0.6" points="{p}"/>')
    if truth is not None:
        p = " ".join(f"{_fmt(sc.x(a))},{_fmt(sc.y(b))}" for a, b in truth)
        out.append(f'<polyline data-series="truth" fill="none" stroke="black" stroke-width="2" points="{p}"/>')
    out.append("</svg>")
    _write(path, out)


def _write(path, lines):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
