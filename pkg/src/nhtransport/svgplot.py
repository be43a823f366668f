"""Minimal log-log line plots written directly as SVG."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import InputError

WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=70, right=20, top=30, bottom=55)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""


@dataclass
class GuideLine:
    """y = prefactor * x**slope * (ln x)**log_power drawn dashed."""

    slope: Fraction
    prefactor: float
    label: str = ""
    log_power: Fraction = Fraction(0)

    def __call__(self, x):
        x = np.asarray(x, float)
        y = self.prefactor * x ** float(self.slope)
        if self.log_power:
            y = y * np.log(x) ** float(self.log_power)
        return y


@dataclass
class LogLogPlot:
    title: str = ""
    xlabel: str = "t"
    ylabel: str = "x_c"
    series: list = field(default_factory=list)
    guides: list = field(default_factory=list)
    comment: str = ""

    def add(self, x, y, label: str = "") -> "LogLogPlot":
        x, y = np.asarray(x, float), np.asarray(y, float)
        keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
        if keep.sum() < 2:
            raise InputError("a log-log series needs at least two positive points")
        self.series.append(Series(x[keep], y[keep], label))
        return self

    def guide(self, slope, anchor_x: float, anchor_y: float, label: str = "", log_power=0) -> "LogLogPlot":
        """Guide line through (anchor_x, anchor_y)."""
        slope, log_power = Fraction(slope), Fraction(log_power)
        unit = GuideLine(slope, 1.0, label, log_power)(anchor_x)
        self.guides.append(GuideLine(slope, float(anchor_y / unit), label, log_power))
        return self

    def render(self) -> str:
        if not self.series:
            raise InputError("nothing to plot")
        xs = np.concatenate([s.x for s in self.series])
        ys = np.concatenate([s.y for s in self.series])
        x0, x1 = math.floor(math.log10(xs.min())), math.ceil(math.log10(xs.max()))
        y0, y1 = math.floor(math.log10(ys.min())), math.ceil(math.log10(ys.max()))
        x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
        left, top = MARGIN["left"], MARGIN["top"]
        pw = WIDTH - left - MARGIN["right"]
        ph = HEIGHT - top - MARGIN["bottom"]

        def px(x):
            return left + (np.log10(x) - x0) / (x1 - x0) * pw

        def py(y):
            return top + ph - (np.log10(y) - y0) / (y1 - y0) * ph

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
               f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">']
        if self.comment:
            out.append(f"<!-- {escape(self.comment.replace('--', '- -'))} -->")
        out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="white" stroke="black"/>')
        for k in range(x0, x1 + 1):
            X = px(10.0 ** k)
            out.append(f'<line class="grid" x1="{X:.2f}" y1="{top}" x2="{X:.2f}" y2="{top + ph}" stroke="#ccc"/>')
            out.append(f'<text x="{X:.2f}" y="{top + ph + 18}" text-anchor="middle">1e{k}</text>')
        for k in range(y0, y1 + 1):
            Y = py(10.0 ** k)
            out.append(f'<line class="grid" x1="{left}" y1="{Y:.2f}" x2="{left + pw}" y2="{Y:.2f}" stroke="#ccc"/>')
            out.append(f'<text x="{left - 6}" y="{Y + 4:.2f}" text-anchor="end">1e{k}</text>')
        out.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {top + ph / 2})">{escape(self.ylabel)}</text>')
        if self.title:
            out.append(f'<text x="{left + pw / 2}" y="{top - 10}" text-anchor="middle">{escape(self.title)}</text>')

        clip = f'<clipPath id="plot"><rect x="{left}" y="{top}" width="{pw}" height="{ph}"/></clipPath>'
        out.append(clip)
        legend = []
        for i, s in enumerate(self.series):
            color = PALETTE[i % len(PALETTE)]
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(s.x), py(s.y)))
            out.append(f'<polyline class="data" clip-path="url(#plot)" fill="none" stroke="{color}" '
                       f'stroke-width="1.5" points="{pts}"/>')
            legend.append((s.label, color, ""))
        gx = np.geomspace(10.0 ** x0, 10.0 ** x1, 64)
        for g in self.guides:
            gx_ok = gx[gx > 1] if g.log_power else gx
            gy = g(gx_ok)
            ok = gy > 0
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(gx_ok[ok]), py(gy[ok])))
            out.append(f'<polyline class="guide" data-slope="{g.slope}" data-log-power="{g.log_power}" '
                       f'clip-path="url(#plot)" fill="none" stroke="black" stroke-dasharray="6 4" points="{pts}"/>')
            legend.append((g.label or f"t^{g.slope}", "black", ' stroke-dasharray="6 4"'))
        for i, (label, color, dash) in enumerate(legend):
            if not label:
                continue
            Y = top + 16 + 16 * i
            out.append(f'<line x1="{left + 10}" y1="{Y - 4}" x2="{left + 34}" y2="{Y - 4}" stroke="{color}"{dash}/>')
            out.append(f'<text x="{left + 40}" y="{Y}">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def guide_slopes(svg_text: str) -> list[Fraction]:
    """Slopes of the guide lines embedded in a rendered plot."""
    return [Fraction(m) for m in re.findall(r'class="guide" data-slope="([^"]+)"', svg_text)]
