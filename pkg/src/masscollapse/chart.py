"""Static SVG line charts of sweep results (one series per noise law)."""
from __future__ import annotations

import math
import os
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .errors import InputError
from .runner import ResultRow

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 64, 170, 40, 56
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

TITLES = {
    "ghz": ("GHZ parity visibility", "qubits n", "visibility"),
    "branch": ("Branch-mass interference", "branch mass m", "visibility"),
    "grover": ("Grover search", "iterations t", "success probability"),
}


def _series(rows: Sequence[ResultRow]) -> list[tuple[str, str, list[ResultRow]]]:
    """(name, law, rows) groups in a stable order."""
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        key = (r.size, r.law) if r.experiment == "grover" else (r.law,)
        groups.setdefault(key, []).append(r)
    out = []
    for key in sorted(groups):
        law = key[-1]
        name = f"n={key[0]} {law}" if len(key) == 2 else law
        pts = sorted(groups[key], key=lambda r: r.iterations if r.experiment == "grover" else r.size)
        out.append((name, law, pts))
    return out


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    span = hi - lo
    raw = span / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def render_svg(rows: Sequence[ResultRow]) -> str:
    if not rows:
        raise InputError("no rows to chart")
    experiments = {r.experiment for r in rows}
    if len(experiments) != 1:
        raise InputError(f"rows mix experiments: {sorted(experiments)}")
    experiment = experiments.pop()
    title, xlabel, ylabel = TITLES.get(experiment, (experiment, "size", "metric"))
    series = _series(rows)

    xs = [(r.iterations if experiment == "grover" else r.size) for r in rows]
    x_lo, x_hi = min(xs), max(xs)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 1, x_hi + 1
    y_lo = min(0.0, min(r.metric - 2 * r.stderr for r in rows))
    y_hi = max(1.0, max(r.metric + 2 * r.stderr for r in rows))

    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM

    def sx(x: float) -> float:
        return LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{LEFT + plot_w / 2:.2f}" y="{TOP - 16}" text-anchor="middle" font-size="15">{escape(title)}</text>',
        '<g stroke="#ccc" stroke-width="0.5">',
    ]
    xticks = [t for t in _ticks(x_lo, x_hi, min(10, x_hi - x_lo)) if float(t).is_integer()]
    yticks = _ticks(y_lo, y_hi)
    for t in yticks:
        out.append(f'<line x1="{LEFT}" y1="{sy(t):.2f}" x2="{LEFT + plot_w}" y2="{sy(t):.2f}"/>')
    out.append("</g>")
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>')
    for t in xticks:
        out.append(f'<line x1="{sx(t):.2f}" y1="{TOP + plot_h}" x2="{sx(t):.2f}" y2="{TOP + plot_h + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{TOP + plot_h + 18}" text-anchor="middle">{int(t)}</text>')
    for t in yticks:
        out.append(f'<line x1="{LEFT - 5}" y1="{sy(t):.2f}" x2="{LEFT}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{LEFT + plot_w / 2:.2f}" y="{HEIGHT - 16}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{TOP + plot_h / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + plot_h / 2:.2f})">{escape(ylabel)}</text>')

    for i, (name, law, pts) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="6 4"' if law not in ("constant", "none") else ""
        coords = [(sx(r.iterations if experiment == "grover" else r.size), r) for r in pts]
        path = " ".join(f"{x:.2f},{sy(r.metric):.2f}" for x, r in coords)
        out.append(f'<g class="series" data-name="{escape(name)}" stroke="{color}" fill="{color}">')
        out.append(f'<polyline points="{path}" fill="none" stroke-width="2"{dash}/>')
        for x, r in coords:
            if r.stderr > 0:
                y1, y2 = sy(r.metric - 2 * r.stderr), sy(r.metric + 2 * r.stderr)
                out.append(f'<line x1="{x:.2f}" y1="{y1:.2f}" x2="{x:.2f}" y2="{y2:.2f}" stroke-width="1"/>')
                out.append(f'<line x1="{x - 3:.2f}" y1="{y1:.2f}" x2="{x + 3:.2f}" y2="{y1:.2f}" stroke-width="1"/>')
                out.append(f'<line x1="{x - 3:.2f}" y1="{y2:.2f}" x2="{x + 3:.2f}" y2="{y2:.2f}" stroke-width="1"/>')
            out.append(f'<circle cx="{x:.2f}" cy="{sy(r.metric):.2f}" r="3"/>')
        out.append("</g>")
        ly = TOP + 10 + 20 * i
        lx = LEFT + plot_w + 16
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 28}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{lx + 36}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_chart(rows: Sequence[ResultRow], destination: str | os.PathLike) -> Path:
    path = Path(destination)
    path.write_text(render_svg(rows))
    return path
