"""Text-only SVG plots of BER/BLER against Eb/N0 from simulation CSVs."""

from __future__ import annotations

import csv
import math
from collections import OrderedDict
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf")
DASH = {"bler": "", "ber": "6,4"}
MARKER = {"bler": "circle", "ber": "square"}

WIDTH, HEIGHT = 760, 520
LEFT, RIGHT, TOP, BOTTOM = 80, 250, 30, 60


def read_rows(paths: Iterable) -> list:
    rows = []
    for p in paths:
        with open(p, newline="") as fh:
            rows.extend(csv.DictReader(fh))
    if not rows:
        raise ValueError("no data rows in the given CSV file(s)")
    return rows


def series_label(row: dict) -> str:
    dec = row["decoder"]
    label = f"{dec} P({row['N']},{row['k']}) {row['construction']}"
    if dec in ("scl", "scl-crc", "bpl"):
        label += f" L={row['list']}"
    if dec in ("bp", "bpl"):
        label += f" it={row['iters_max']}"
    return label


def group_series(rows: Sequence[dict], metrics: Sequence[str]) -> "OrderedDict[tuple, list]":
    series: OrderedDict = OrderedDict()
    for row in rows:
        for m in metrics:
            series.setdefault((series_label(row), m), []).append(
                (float(row["ebn0_db"]), float(row[m])))
    for key in series:
        series[key].sort()
    return series


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(rows: Sequence[dict], metrics: Sequence[str] = ("bler", "ber"), title: str = "") -> str:
    for m in metrics:
        if m not in ("ber", "bler"):
            raise ValueError(f"unknown metric {m!r}")
    series = group_series(rows, metrics)
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts if y > 0]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if ys:
        d_lo = math.floor(math.log10(min(ys)))
        d_hi = math.ceil(math.log10(max(ys)))
    else:
        d_lo, d_hi = -6, 0
    if d_hi == d_lo:
        d_hi += 1
    pw = WIDTH - LEFT - RIGHT
    ph = HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return TOP + (d_hi - math.log10(y)) / (d_hi - d_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="18" text-anchor="middle">{escape(title)}</text>')
    # decades
    for d in range(d_lo, d_hi + 1):
        y = _fmt(py(10.0 ** d))
        out.append(f'<line x1="{LEFT}" y1="{y}" x2="{LEFT + pw}" y2="{y}" stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y}" text-anchor="end" dominant-baseline="middle">1e{d}</text>')
    # x ticks at a readable step
    span = x_hi - x_lo
    step = next(s for s in (0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0) if span / s <= 10) if span <= 100 else span / 10
    t = math.ceil(x_lo / step - 1e-9) * step
    while t <= x_hi + 1e-9:
        x = _fmt(px(t))
        out.append(f'<line x1="{x}" y1="{TOP}" x2="{x}" y2="{TOP + ph}" stroke="#eeeeee"/>')
        out.append(f'<text x="{x}" y="{TOP + ph + 16}" text-anchor="middle">{t:g}</text>')
        t += step
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 18}" text-anchor="middle">Eb/N0 [dB]</text>')
    out.append(f'<text x="20" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 20 {TOP + ph / 2:.2f})">error rate</text>')

    labels = list(OrderedDict.fromkeys(label for label, _ in series))
    for (label, metric), pts in series.items():
        color = PALETTE[labels.index(label) % len(PALETTE)]
        pts = [(x, y) for x, y in pts if y > 0]
        if not pts:
            continue
        dash = f' stroke-dasharray="{DASH[metric]}"' if DASH[metric] else ""
        if len(pts) > 1:
            coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        for x, y in pts:
            out.append(_marker(MARKER[metric], px(x), py(y), color))

    ly = TOP + 10
    lx = LEFT + pw + 15
    for (label, metric) in series:
        color = PALETTE[labels.index(label) % len(PALETTE)]
        dash = f' stroke-dasharray="{DASH[metric]}"' if DASH[metric] else ""
        out.append(f'<g class="legend-entry"><line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="1.5"{dash}/>')
        out.append(_marker(MARKER[metric], lx + 12, ly, color, "legend-marker"))
        out.append(f'<text x="{lx + 30}" y="{ly}" dominant-baseline="middle" font-size="10">'
                   f'{escape(label)} {metric.upper()}</text></g>')
        ly += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _marker(kind: str, x: float, y: float, color: str, cls: str = "marker") -> str:
    if kind == "circle":
        return f'<circle class="{cls}" cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="{color}"/>'
    return (f'<rect class="{cls}" x="{_fmt(x - 3)}" y="{_fmt(y - 3)}" width="6" height="6" '
            f'fill="none" stroke="{color}"/>')


def plot_csv(paths: Sequence, out: Path, metrics: Sequence[str] = ("bler", "ber"), title: str = "") -> str:
    svg = render_svg(read_rows(paths), metrics, title)
    Path(out).write_text(svg)
    return svg
