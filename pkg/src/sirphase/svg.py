"""Minimal self-contained SVG charts for the CSV outputs.

Each plot is one or two panels with a frame, a handful of ticks and
labelled axes. Marks carry ``class="mark"`` (density cells additionally
``class="mark cell"``) so that downstream checks can find them.
"""

from __future__ import annotations

import math
from html import escape

import numpy as np

from .csvio import CsvTable, read_csv

PALETTE = {
    "WHITE": "#ffffff",
    "BLUE": "#1f4fd6",
    "GREEN": "#2ca02c",
    "RED": "#d62728",
    "ORANGE": "#ff7f0e",
}

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 20, 20, 56

_UNITS = {
    "epsilon": "epsilon (dimensionless)",
    "phi": "phi (rad)",
    "alpha": "alpha (1/year)",
    "t": "t (years)",
    "S": "S (fraction)",
    "I": "I (fraction)",
    "lambda1": "lambda1 (1/year)",
}


class Panel:
    def __init__(self, x0, y0, w, h, xlim, ylim):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xlim, self.ylim = _pad(xlim), _pad(ylim)

    def x(self, v):
        lo, hi = self.xlim
        return self.x0 + (v - lo) / (hi - lo) * self.w

    def y(self, v):
        lo, hi = self.ylim
        return self.y0 + self.h - (v - lo) / (hi - lo) * self.h

    def axes(self, xlabel, ylabel, panel_id) -> list[str]:
        out = [f'<g id="{panel_id}">',
               f'<rect x="{self.x0}" y="{self.y0}" width="{self.w}" height="{self.h}" '
               f'fill="none" stroke="black"/>']
        for v in _ticks(*self.xlim):
            px = self.x(v)
            out.append(f'<line x1="{px:.2f}" y1="{self.y0 + self.h}" x2="{px:.2f}" '
                       f'y2="{self.y0 + self.h + 5}" stroke="black"/>')
            out.append(f'<text x="{px:.2f}" y="{self.y0 + self.h + 18}" font-size="11" '
                       f'text-anchor="middle">{_label(v)}</text>')
        for v in _ticks(*self.ylim):
            py = self.y(v)
            out.append(f'<line x1="{self.x0 - 5}" y1="{py:.2f}" x2="{self.x0}" y2="{py:.2f}" '
                       f'stroke="black"/>')
            out.append(f'<text x="{self.x0 - 8}" y="{py + 4:.2f}" font-size="11" '
                       f'text-anchor="end">{_label(v)}</text>')
        out.append(f'<text x="{self.x0 + self.w / 2:.1f}" y="{self.y0 + self.h + 36}" '
                   f'font-size="13" text-anchor="middle">{escape(xlabel)}</text>')
        cy = self.y0 + self.h / 2
        out.append(f'<text x="18" y="{cy:.1f}" font-size="13" text-anchor="middle" '
                   f'transform="rotate(-90 18 {cy:.1f})">{escape(ylabel)}</text>')
        return out


def _pad(lim):
    lo, hi = lim
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return (0.0, 1.0)
    if hi <= lo:
        span = abs(lo) * 0.05 or 1.0
        return (lo - span, hi + span)
    return (lo, hi)


def _ticks(lo, hi, count=5):
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=mag * 10)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _label(v):
    return f"{v:.4g}"


def _limits(values):
    values = [v for v in values if math.isfinite(v)]
    if not values:
        return (0.0, 1.0)
    return (min(values), max(values))


def _document(body: list[str]) -> str:
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        *body,
        "</svg>",
    ]) + "\n"


def _stacked(xlim, ylims):
    inner_h = HEIGHT - MARGIN_T - MARGIN_B
    gap = 50
    h = (inner_h - gap * (len(ylims) - 1)) / len(ylims)
    w = WIDTH - MARGIN_L - MARGIN_R
    return [Panel(MARGIN_L, MARGIN_T + k * (h + gap), w, h, xlim, ylim)
            for k, ylim in enumerate(ylims)]


def _param_name(table: CsvTable) -> str:
    for line in table.header.splitlines():
        name, _, value = line.partition("=")
        if name.strip() == "scan.param":
            return value.strip()
    return "param"


def timeseries_svg(table: CsvTable) -> str:
    t = table.column("t")
    names = ["S", "I"]
    panels = _stacked(_limits(t), [_limits(table.column(n) + table.column(n + "2"))
                                   if n + "2" in table.columns else _limits(table.column(n))
                                   for n in names])
    body = []
    for panel, name in zip(panels, names):
        body += panel.axes(_UNITS["t"], _UNITS[name], f"panel-{name}")
        for col, colour in ((name, "#d62728"), (name + "2", "#2ca02c")):
            if col not in table.columns or not table.rows:
                continue
            pts = " ".join(f"{panel.x(a):.2f},{panel.y(b):.2f}"
                           for a, b in zip(t, table.column(col)) if math.isfinite(b))
            body.append(f'<polyline class="mark" points="{pts}" fill="none" '
                        f'stroke="{colour}" stroke-width="1"/>')
        body.append("</g>")
    return _document(body)


def bifurcation_svg(table: CsvTable) -> str:
    param = table.column("param")
    names = ["S", "I"]
    panels = _stacked(_limits(param), [_limits(table.column(n)) for n in names])
    xlabel = _UNITS.get(_param_name(table), _param_name(table))
    body = []
    for panel, name in zip(panels, names):
        body += panel.axes(xlabel, _UNITS[name], f"panel-{name}")
        for p, v in zip(param, table.column(name)):
            if math.isfinite(v):
                body.append(f'<circle class="mark" cx="{panel.x(p):.2f}" cy="{panel.y(v):.2f}" '
                            f'r="0.8" fill="black"/>')
        body.append("</g>")
    return _document(body)


def lyapunov_svg(table: CsvTable) -> str:
    param, lam = table.column("param"), table.column("lambda1")
    ylim = _limits(lam + [0.0])
    (panel,) = _stacked(_limits(param), [ylim])
    xlabel = _UNITS.get(_param_name(table), _param_name(table))
    body = panel.axes(xlabel, _UNITS["lambda1"], "panel-lambda1")
    y0 = panel.y(0.0)
    body.append(f'<line x1="{panel.x0}" y1="{y0:.2f}" x2="{panel.x0 + panel.w}" y2="{y0:.2f}" '
                f'stroke="#888888" stroke-dasharray="4 3"/>')
    pts = [(panel.x(p), panel.y(v)) for p, v in zip(param, lam) if math.isfinite(v)]
    if pts:
        body.append('<polyline class="mark" points="'
                    + " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
                    + '" fill="none" stroke="black" stroke-width="1"/>')
    body.append("</g>")
    return _document(body)


def density_svg(table: CsvTable) -> str:
    phi, alpha, bins = table.column("phi"), table.column("alpha"), table.column("bin")
    (panel,) = _stacked(_limits(phi), [_limits(alpha)])
    body = panel.axes(_UNITS["phi"], _UNITS["alpha"], "panel-density")
    if table.rows:
        dphi = _spacing(phi, panel.xlim)
        dalpha = _spacing(alpha, panel.ylim)
        for p, a, b in zip(phi, alpha, bins):
            colour = PALETTE.get(b)
            if colour is None:
                continue
            x0, x1 = panel.x(p - dphi / 2), panel.x(p + dphi / 2)
            y0, y1 = panel.y(a + dalpha / 2), panel.y(a - dalpha / 2)
            body.append(f'<rect class="mark cell" x="{x0:.2f}" y="{y0:.2f}" '
                        f'width="{x1 - x0:.2f}" height="{y1 - y0:.2f}" fill="{colour}" '
                        f'stroke="none"/>')
    body.append("</g>")
    return _document(body)


def _spacing(values, lim):
    uniq = np.unique(np.asarray(values))
    if len(uniq) < 2:
        return (lim[1] - lim[0]) / 10
    return float(np.min(np.diff(uniq)))


RENDERERS = {
    "timeseries": timeseries_svg,
    "bifurcation": bifurcation_svg,
    "lyapunov-curve": lyapunov_svg,
    "density": density_svg,
}


def guess_kind(columns) -> str:
    cols = set(columns)
    if {"phi", "alpha", "bin"} <= cols:
        return "density"
    if {"param", "sample_index"} <= cols:
        return "bifurcation"
    if {"param", "lambda1"} <= cols:
        return "lyapunov-curve"
    if {"t", "S", "I"} <= cols:
        return "timeseries"
    raise ValueError(f"cannot infer plot kind from columns {list(columns)}")


_REQUIRED = {
    "timeseries": ("t", "S", "I"),
    "bifurcation": ("param", "S", "I"),
    "lyapunov-curve": ("param", "lambda1"),
    "density": ("phi", "alpha", "bin"),
}


def render_svg(csv_text: str, kind: str | None = None) -> str:
    """SVG for a CSV produced by this package.

    Raises :class:`~sirphase.csvio.CsvFormatError` for malformed input and
    ``ValueError`` when the columns do not fit ``kind``.
    """
    table = read_csv(csv_text)
    kind = kind or guess_kind(table.columns)
    missing = [c for c in _REQUIRED[kind] if c not in table.columns]
    if missing:
        raise ValueError(f"{kind} plot needs columns {missing}")
    return RENDERERS[kind](table)
