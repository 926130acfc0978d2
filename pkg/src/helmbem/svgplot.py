"""Minimal deterministic log-log SVG plots (no plotting dependency).

Markers are ``<circle>`` elements, one per data point, so output is easy to
inspect; identical input produces byte-identical SVG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

_PALETTE = ("#1f6fb4", "#d1495b", "#3a7d44", "#8d5a97", "#c77d2e", "#3b3b3b")
_W, _H = 640, 460
_ML, _MR, _MT, _MB = 70, 20, 36, 56


@dataclass
class Series:
    label: str
    xs: list
    ys: list
    annotation: str = ""


@dataclass
class LogLogPlot:
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)

    def add(self, label, xs, ys, annotation=""):
        xs = [float(v) for v in xs]
        ys = [float(v) for v in ys]
        if not xs or len(xs) != len(ys):
            raise ValueError(f"series {label!r} is empty or mismatched")
        if min(xs) <= 0 or min(ys) <= 0:
            raise ValueError(f"series {label!r} needs positive data on log axes")
        self.series.append(Series(label, xs, ys, annotation))

    def render(self) -> str:
        if not self.series:
            raise ValueError("nothing to plot")
        x_lo = min(min(s.xs) for s in self.series)
        x_hi = max(max(s.xs) for s in self.series)
        y_lo = min(min(s.ys) for s in self.series)
        y_hi = max(max(s.ys) for s in self.series)
        lx0, lx1 = _pad_log(x_lo, x_hi)
        ly0, ly1 = _pad_log(y_lo, y_hi)
        pw = _W - _ML - _MR
        ph = _H - _MT - _MB

        def px(x):
            return _ML + pw * (math.log10(x) - lx0) / (lx1 - lx0)

        def py(y):
            return _MT + ph * (ly1 - math.log10(y)) / (ly1 - ly0)

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}" font-family="Helvetica,Arial,sans-serif">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
            f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">'
            f"{_esc(self.title)}</text>",
        ]
        # axes box and decade ticks
        out.append(
            f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" '
            f'stroke="#444" stroke-width="1"/>'
        )
        for d in range(math.ceil(lx0), math.floor(lx1) + 1):
            x = px(10.0**d)
            out.append(f'<line x1="{x:.1f}" y1="{_MT}" x2="{x:.1f}" '
                       f'y2="{_MT + ph}" stroke="#ddd"/>')
            out.append(f'<text x="{x:.1f}" y="{_MT + ph + 16}" text-anchor="middle" '
                       f'font-size="11">1e{d}</text>')
        for d in range(math.ceil(ly0), math.floor(ly1) + 1):
            y = py(10.0**d)
            out.append(f'<line x1="{_ML}" y1="{y:.1f}" x2="{_ML + pw}" '
                       f'y2="{y:.1f}" stroke="#ddd"/>')
            out.append(f'<text x="{_ML - 6}" y="{y + 4:.1f}" text-anchor="end" '
                       f'font-size="11">1e{d}</text>')
        out.append(f'<text x="{_ML + pw / 2:.1f}" y="{_H - 12}" text-anchor="middle" '
                   f'font-size="12">{_esc(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{_MT + ph / 2:.1f}" text-anchor="middle" '
                   f'font-size="12" transform="rotate(-90 16 {_MT + ph / 2:.1f})">'
                   f'{_esc(self.ylabel)}</text>')

        for i, s in enumerate(self.series):
            color = _PALETTE[i % len(_PALETTE)]
            path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.xs, s.ys))
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                       f'stroke-width="1.5"/>')
            for x, y in zip(s.xs, s.ys):
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3.5" '
                           f'fill="{color}" class="marker"/>')
            label = s.label + (f"  [{s.annotation}]" if s.annotation else "")
            ly = _MT + 16 + 15 * i
            out.append(f'<line x1="{_ML + 8}" y1="{ly - 4}" x2="{_ML + 28}" '
                       f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{_ML + 34}" y="{ly}" font-size="11">'
                       f"{_esc(label)}</text>")
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _pad_log(lo: float, hi: float) -> tuple[float, float]:
    llo, lhi = math.log10(lo), math.log10(hi)
    if lhi - llo < 1e-9:
        llo, lhi = llo - 0.5, lhi + 0.5
    pad = 0.06 * (lhi - llo)
    return llo - pad, lhi + pad


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))
