"""CSV, JSON and SVG output for landscapes, threshold reports and clamp runs."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .clamp import ClampResult
from .threshold import Landscape, ThresholdReport

UNBOUNDED = "unbounded"


def _cell(x) -> str:
    x = float(x)
    if math.isinf(x) and x < 0:
        return UNBOUNDED
    if not math.isfinite(x):
        raise ValueError(f"refusing to write non-finite value {x}")
    return repr(x)


def landscape_rows(l: Landscape) -> tuple[list[str], list[list[str]]]:
    if l.context.kind == "inhibitory":
        A, alpha = l.context.fixed
        header = ["A", "S_r", "alpha_star", "B", "beta_star", "v_terminal"]
        rows = [
            [_cell(A), _cell(s), _cell(alpha), _cell(b), _cell(beta), _cell(v)]
            for v, s, b, beta in zip(l.coords, l.supply, l.B, l.rate)
        ]
        return header, rows
    header = ["A", "S_r", "alpha_star"]
    return header, [[_cell(a), _cell(s), _cell(r)] for a, s, r in zip(l.coords, l.supply, l.rate)]


def write_landscape_csv(l: Landscape, path: str | Path) -> None:
    header, rows = landscape_rows(l)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_landscape_csv(path: str | Path) -> dict[str, list]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols: dict[str, list] = {name: [] for name in reader.fieldnames}
        for row in reader:
            for k, v in row.items():
                cols[k].append(-math.inf if v == UNBOUNDED else float(v))
    return cols


def _jsonable(x):
    if isinstance(x, float):
        if math.isinf(x) and x < 0:
            return UNBOUNDED
        if not math.isfinite(x):
            return None
        return x
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    return x


def report_dict(report: ThresholdReport) -> dict:
    return _jsonable(asdict(report))


def landscape_dict(l: Landscape) -> dict:
    header, rows = landscape_rows(l)
    return {
        "coordinate": l.coord_name,
        "rate": l.rate_name,
        "columns": header,
        "nodes": len(rows),
        "rate_grid": _jsonable(list(l.context.rate_grid)),
        "censored_nodes": int(np.sum(l.censored)),
        "boundary_minima": sum(b is not None for b in l.boundary),
        "energy_evaluations": l.evaluations,
    }


def write_trajectory_csv(result: ClampResult, path: str | Path) -> None:
    """Columns ``t, v, i``, the internal state and ``cumulative_supply``."""
    s = result.supply
    names = list(s.state)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "v", "i", *names, "cumulative_supply"])
        columns = [s.t, s.v, s.i, *(s.state[n] for n in names), s.cumulative_supply]
        for row in zip(*columns):
            writer.writerow([repr(float(x)) for x in row])


# --- SVG -------------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    return [first + k * step for k in range(int((hi - first) / step + 1e-9) + 1)]


def _fmt(x: float) -> str:
    return f"{x:.4g}"


def line_chart(
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    xlabel: str,
    ylabel: str,
    title: str = "",
    marker: tuple[float, float, str] | None = None,
    width: int = 640,
    height: int = 420,
) -> str:
    """Static SVG line chart.  Non-finite y values break the line."""
    left, right, top, bottom = 70, 20, 40, 55
    pw, ph = width - left - right, height - top - bottom
    xs = [float(x) for _, xv, _ in series for x in xv]
    ys = [float(y) for _, _, yv in series for y in yv if math.isfinite(y)]
    if marker is not None:
        xs.append(marker[0])
        ys.append(marker[1])
    x0, x1 = min(xs), max(xs)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.2f}" y1="{top + ph}" x2="{px(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(
            f'<text x="{px(t):.2f}" y="{top + ph + 19}" text-anchor="middle" font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{py(t):.2f}" x2="{left}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(
            f'<text x="{left - 8}" y="{py(t) + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    out.append(
        f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle" font-family="sans-serif" font-size="13">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{top + ph / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>'
    )
    for k, (label, xv, yv) in enumerate(series):
        color = _COLORS[k % len(_COLORS)]
        segment: list[str] = []
        segments = []
        for x, y in zip(xv, yv):
            if math.isfinite(y):
                segment.append(f"{px(x):.2f},{py(y):.2f}")
            elif segment:
                segments.append(segment)
                segment = []
        if segment:
            segments.append(segment)
        for seg in segments:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{" ".join(seg)}"/>')
        censored = [x for x, y in zip(xv, yv) if not math.isfinite(y)]
        for x in censored:
            out.append(
                f'<text x="{px(x):.2f}" y="{top + ph - 4}" text-anchor="middle" font-size="9" fill="{color}">&#8595;</text>'
            )
        if len(series) > 1 or label:
            out.append(
                f'<text x="{left + pw - 6}" y="{top + 16 + 15 * k}" text-anchor="end" font-family="sans-serif" '
                f'font-size="12" fill="{color}">{escape(label)}</text>'
            )
    if marker is not None:
        mx, my, mlabel = marker
        out.append(f'<circle cx="{px(mx):.2f}" cy="{py(my):.2f}" r="4.5" fill="none" stroke="black" stroke-width="1.5"/>')
        out.append(
            f'<text x="{px(mx) + 8:.2f}" y="{py(my) - 8:.2f}" font-family="sans-serif" font-size="12">{escape(mlabel)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def landscape_svg(l: Landscape, report: ThresholdReport | None, title: str, xlabel: str | None = None) -> str:
    marker = None
    if report is not None and report.classification != "NoneFound" and report.v_terminal is not None:
        x = report.v_terminal if l.context.kind == "inhibitory" else report.A
        marker = (x, report.supply, f"{report.classification} at {_fmt(x)}")
    label = xlabel or ("terminal voltage v(0)" if l.context.kind == "inhibitory" else "target amplitude A")
    return line_chart([("S_r", l.coords, l.supply)], label, "minimal supplied energy", title, marker)


def trajectory_svg(result: ClampResult, title: str) -> str:
    s = result.supply
    return line_chart([("v(t)", s.t, s.v)], "time t", "voltage v", title)
