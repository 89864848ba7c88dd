"""Minimal self-contained SVG line charts (no plotting dependency).

Output is deterministic: fixed palette, fixed geometry, floats formatted
with %.6g, so identical inputs give identical bytes.
"""

from __future__ import annotations

import math

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2")


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _ticks(lo: float, hi: float, n: int = 5):
    if not math.isfinite(lo) or not math.isfinite(hi) or lo == hi:
        return [lo]
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(t)
        t += step
    return ticks or [lo]


class _Axis:
    def __init__(self, lo, hi, pix_lo, pix_hi, log=False):
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        self.lo, self.hi = lo, hi
        self.pix_lo, self.pix_hi = pix_lo, pix_hi
        self.log = log

    def __call__(self, v):
        x = math.log10(v) if self.log else v
        frac = (x - self.lo) / (self.hi - self.lo)
        return self.pix_lo + frac * (self.pix_hi - self.pix_lo)

    def tick_values(self):
        raw = _ticks(self.lo, self.hi)
        return [(10 ** t if self.log else t) for t in raw]


def _panel(parts, series, x0, y0, w, h, title, xlabel, ylabel, logx, logy):
    xs_all = [x for _, xs, _ in series for x in xs if math.isfinite(x)]
    ys_all = [y for _, _, ys in series for y in ys if math.isfinite(y)]
    if logx:
        xs_all = [x for x in xs_all if x > 0]
    if logy:
        ys_all = [y for y in ys_all if y > 0]
    if not xs_all or not ys_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    ml, mr, mt, mb = 58, 12, 26, 40
    ax = _Axis(min(xs_all), max(xs_all), x0 + ml, x0 + w - mr, log=logx)
    ay = _Axis(min(ys_all), max(ys_all), y0 + h - mb, y0 + mt, log=logy)
    parts.append(f'<rect x="{x0 + ml}" y="{y0 + mt}" width="{w - ml - mr}" '
                 f'height="{h - mt - mb}" fill="none" stroke="#888"/>')
    parts.append(f'<text x="{x0 + w / 2:.1f}" y="{y0 + 16}" text-anchor="middle" '
                 f'font-size="13" font-weight="bold">{title}</text>')
    for tv in ax.tick_values():
        px = ax(tv)
        parts.append(f'<line x1="{px:.1f}" y1="{y0 + h - mb}" x2="{px:.1f}" '
                     f'y2="{y0 + h - mb + 4}" stroke="#444"/>')
        parts.append(f'<text x="{px:.1f}" y="{y0 + h - mb + 16}" text-anchor="middle" '
                     f'font-size="10">{_fmt(tv)}</text>')
    for tv in ay.tick_values():
        py = ay(tv)
        parts.append(f'<line x1="{x0 + ml - 4}" y1="{py:.1f}" x2="{x0 + ml}" '
                     f'y2="{py:.1f}" stroke="#444"/>')
        parts.append(f'<text x="{x0 + ml - 6}" y="{py + 3:.1f}" text-anchor="end" '
                     f'font-size="10">{_fmt(tv)}</text>')
    parts.append(f'<text x="{x0 + w / 2:.1f}" y="{y0 + h - 6}" text-anchor="middle" '
                 f'font-size="11">{xlabel}</text>')
    parts.append(f'<text x="{x0 + 14}" y="{y0 + h / 2:.1f}" text-anchor="middle" '
                 f'font-size="11" transform="rotate(-90 {x0 + 14} {y0 + h / 2:.1f})">'
                 f'{ylabel}</text>')
    for si, (label, xs, ys) in enumerate(series):
        color = _PALETTE[si % len(_PALETTE)]
        pts = []
        for xv, yv in zip(xs, ys):
            if not (math.isfinite(xv) and math.isfinite(yv)):
                continue
            if (logx and xv <= 0) or (logy and yv <= 0):
                continue
            pts.append(f"{ax(xv):.2f},{ay(yv):.2f}")
        if pts:
            parts.append(f'<polyline points="{" ".join(pts)}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"/>')
        ly = y0 + mt + 14 + 13 * si
        parts.append(f'<line x1="{x0 + ml + 6}" y1="{ly - 4}" x2="{x0 + ml + 26}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{x0 + ml + 30}" y="{ly}" font-size="10">{label}</text>')


def line_chart(series, title="", xlabel="", ylabel="", logx=False, logy=False,
               width=640, height=420) -> str:
    """One panel; ``series`` is a list of (label, xs, ys)."""
    return grid_chart([(title, series)], ncols=1, xlabel=xlabel, ylabel=ylabel,
                      logx=logx, logy=logy, panel_width=width, panel_height=height)


def grid_chart(panels, ncols=2, xlabel="", ylabel="", logx=False, logy=False,
               panel_width=420, panel_height=320) -> str:
    """Grid of panels; ``panels`` is a list of (title, series)."""
    n = len(panels)
    ncols = max(1, min(ncols, n))
    nrows = (n + ncols - 1) // ncols
    W, H = ncols * panel_width, nrows * panel_height
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
             f'viewBox="0 0 {W} {H}" font-family="Helvetica,Arial,sans-serif">',
             f'<rect width="{W}" height="{H}" fill="white"/>']
    for i, (title, series) in enumerate(panels):
        r, c = divmod(i, ncols)
        _panel(parts, series, c * panel_width, r * panel_height,
               panel_width, panel_height, title, xlabel, ylabel, logx, logy)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
