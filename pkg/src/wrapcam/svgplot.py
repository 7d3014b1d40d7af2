"""Minimal native SVG line plots (no plotting dependency).

Good enough for design reports: multiple series, dashed lines, horizontal
limit lines, axes with tick labels, a legend, and an equal-aspect mode for
cam outlines.
"""
from __future__ import annotations

import math

import numpy as np

PALETTE = ["#1f6fb2", "#d0622a", "#2e8b57", "#8a4fbf", "#b22222", "#666666"]


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.4g}"


class SvgPlot:
    """Accumulates series and writes one SVG file."""

    def __init__(self, title: str = "", xlabel: str = "", ylabel: str = "",
                 width: int = 720, height: int = 480, aspect_equal: bool = False):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.width = width
        self.height = height
        self.aspect_equal = aspect_equal
        self.series = []
        self.hlines = []

    def add_line(self, x, y, label: str = "", color: str | None = None,
                 dash: bool = False, width: float = 1.6):
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.size != y.size or x.size < 2:
            raise ValueError("series needs matching x/y with at least two points")
        if color is None:
            color = PALETTE[len(self.series) % len(PALETTE)]
        self.series.append((x, y, label, color, dash, width))

    def add_hline(self, y: float, label: str = "", color: str = "#b22222"):
        self.hlines.append((float(y), label, color))

    def _ranges(self) -> tuple:
        xs = np.concatenate([s[0] for s in self.series])
        ys = np.concatenate([s[1] for s in self.series]
                            + [np.array([h[0]]) for h in self.hlines])
        x0, x1 = float(np.min(xs)), float(np.max(xs))
        y0, y1 = float(np.min(ys)), float(np.max(ys))
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y1 = y0 + 1.0
        padx = 0.05 * (x1 - x0)
        pady = 0.07 * (y1 - y0)
        return x0 - padx, x1 + padx, y0 - pady, y1 + pady

    def write(self, path) -> None:
        if not self.series:
            raise ValueError("nothing to plot")
        x0, x1, y0, y1 = self._ranges()
        ml, mr, mt, mb = 74, 20, 34, 52
        pw = self.width - ml - mr
        ph = self.height - mt - mb
        if self.aspect_equal:
            sx = pw / (x1 - x0)
            sy = ph / (y1 - y0)
            s = min(sx, sy)
            cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            x0, x1 = cx - 0.5 * pw / s, cx + 0.5 * pw / s
            y0, y1 = cy - 0.5 * ph / s, cy + 0.5 * ph / s

        def px(x):
            return ml + (x - x0) / (x1 - x0) * pw

        def py(y):
            return mt + ph - (y - y0) / (y1 - y0) * ph

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            f'<text x="{self.width / 2:.1f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{self.title}</text>',
        ]
        # axes box and ticks
        parts.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" '
                     'fill="none" stroke="#333" stroke-width="1"/>')
        for t in _nice_ticks(x0, x1):
            parts.append(f'<line x1="{px(t):.1f}" y1="{mt + ph}" x2="{px(t):.1f}" '
                         f'y2="{mt + ph + 4}" stroke="#333"/>')
            parts.append(f'<text x="{px(t):.1f}" y="{mt + ph + 16}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="10">{_fmt(t)}</text>')
        for t in _nice_ticks(y0, y1):
            parts.append(f'<line x1="{ml - 4}" y1="{py(t):.1f}" x2="{ml}" '
                         f'y2="{py(t):.1f}" stroke="#333"/>')
            parts.append(f'<text x="{ml - 7}" y="{py(t) + 3:.1f}" text-anchor="end" '
                         f'font-family="sans-serif" font-size="10">{_fmt(t)}</text>')
        parts.append(f'<text x="{ml + pw / 2:.1f}" y="{self.height - 12}" '
                     'text-anchor="middle" font-family="sans-serif" font-size="12">'
                     f'{self.xlabel}</text>')
        parts.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12" '
                     f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{self.ylabel}</text>')

        for y, label, color in self.hlines:
            parts.append(f'<line x1="{ml}" y1="{py(y):.1f}" x2="{ml + pw}" '
                         f'y2="{py(y):.1f}" stroke="{color}" stroke-width="1.2" '
                         'stroke-dasharray="7,4"/>')
            if label:
                parts.append(f'<text x="{ml + pw - 4}" y="{py(y) - 4:.1f}" '
                             'text-anchor="end" font-family="sans-serif" '
                             f'font-size="10" fill="{color}">{label}</text>')

        for x, y, label, color, dash, lw in self.series:
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
            dash_attr = ' stroke-dasharray="6,4"' if dash else ""
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                         f'stroke-width="{lw}"{dash_attr}/>')

        legend_items = [(s[2], s[3], s[4]) for s in self.series if s[2]]
        for i, (label, color, dash) in enumerate(legend_items):
            ly = mt + 12 + 16 * i
            dash_attr = ' stroke-dasharray="6,4"' if dash else ""
            parts.append(f'<line x1="{ml + 10}" y1="{ly}" x2="{ml + 34}" y2="{ly}" '
                         f'stroke="{color}" stroke-width="2"{dash_attr}/>')
            parts.append(f'<text x="{ml + 40}" y="{ly + 4}" font-family="sans-serif" '
                         f'font-size="11">{label}</text>')

        parts.append("</svg>")
        with open(path, "w") as fh:
            fh.write("\n".join(parts))


def cam_outline_plot(profiles, labels, title: str = "Cam profiles") -> SvgPlot:
    """Equal-aspect plot of one or more cam outlines with the axis origin marked."""
    from .geometry import polyval_d2

    plot = SvgPlot(title=title, xlabel="x [m]", ylabel="y [m]", aspect_equal=True)
    for profile, label in zip(profiles, labels):
        phi = np.linspace(0.0, profile.phi_max, 400)
        rho = polyval_d2(profile.coeffs, phi)[0]
        plot.add_line(rho * np.cos(phi), rho * np.sin(phi), label=label)
    plot.add_line([-1e-4, 1e-4, 0, 0, 0], [0, 0, 0, -1e-4, 1e-4], label="",
                  color="#000000", width=1.0)
    return plot
