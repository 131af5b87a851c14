"""Minimal deterministic SVG line plots (no plotting dependency)."""

from __future__ import annotations

import csv
import math
from pathlib import Path

W, H = 640, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 50


def read_numeric_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty CSV: no header") from None
        rows = []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append(row)
    return header, rows


def _column(header, rows, name):
    if name not in header:
        raise ValueError(f"column {name!r} not in CSV header {header}")
    i = header.index(name)
    out = []
    for r in rows:
        try:
            out.append(float(r[i]) if r[i] != "" else math.nan)
        except ValueError:
            raise ValueError(f"non-numeric value {r[i]!r} in column {name!r}") from None
    return out


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(v))}"
    return f"{v:.4g}"


def render(xs, ys, xlabel="x", ylabel="y", loglog=False, title="") -> str:
    pts = []
    for x, y in zip(xs, ys):
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        if loglog:
            if x <= 0 or y <= 0:
                continue
            x, y = math.log10(x), math.log10(y)
        pts.append((x, y))
    if pts:
        x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
        y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for k in range(5):
        fx = x0 + (x1 - x0) * k / 4
        fy = y0 + (y1 - y0) * k / 4
        out.append(f'<text x="{_fmt(sx(fx))}" y="{H - BOTTOM + 18}" font-size="11" text-anchor="middle">'
                   f"{_tick_label(fx, loglog)}</text>")
        out.append(f'<text x="{LEFT - 6}" y="{_fmt(sy(fy) + 4)}" font-size="11" text-anchor="end">'
                   f"{_tick_label(fy, loglog)}</text>")
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 10}" font-size="13" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.1f}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{_esc(ylabel)}</text>')
    if title:
        out.append(f'<text x="{W / 2:.1f}" y="18" font-size="14" text-anchor="middle">{_esc(title)}</text>')
    if len(pts) > 1:
        path = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="steelblue" stroke-width="1.5"/>')
    for x, y in pts:
        out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3" fill="steelblue"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def plot_csv(csv_path, out_path, x: str | None = None, y: str | None = None, loglog: bool = False) -> Path:
    header, rows = read_numeric_csv(csv_path)
    x = x or header[0]
    y = y or (header[1] if len(header) > 1 else header[0])
    xs = _column(header, rows, x)
    ys = _column(header, rows, y)
    svg = render(xs, ys, x, y, loglog, title=Path(csv_path).name)
    out_path = Path(out_path)
    tmp = out_path.with_suffix(out_path.suffix + ".tmp")
    tmp.write_text(svg)
    tmp.replace(out_path)
    return out_path
