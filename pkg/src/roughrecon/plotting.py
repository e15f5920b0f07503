"""Deterministic SVG line plots for profiles and error curves.

Fixed canvas size, fixed number formatting and no metadata, so the same
input always yields the same bytes.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 400
MARGIN = {"left": 70, "right": 150, "top": 30, "bottom": 50}
COLORS = ["#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"]


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v):
    return f"{v:.2f}"


def line_plot(series, title, xlabel, ylabel, path, markers=False):
    """Write an SVG with one polyline per ``(label, xs, ys)`` series.

    Non-finite points are dropped. Returns the path written.
    """
    clean = []
    for label, xs, ys in series:
        pts = [(float(x), float(y)) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
        if pts:
            clean.append((label, pts))
    if not clean:
        raise ValueError("nothing to plot")
    allx = [p[0] for _, pts in clean for p in pts]
    ally = [p[1] for _, pts in clean for p in pts]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000000"/>',
    ]
    for t in _nice_ticks(x0, x1):
        X = sx(t)
        out.append(f'<line x1="{_fmt(X)}" y1="{top + ph}" x2="{_fmt(X)}" y2="{top + ph + 5}" stroke="#000000"/>')
        out.append(f'<text x="{_fmt(X)}" y="{top + ph + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        Y = sy(t)
        out.append(f'<line x1="{left - 5}" y1="{_fmt(Y)}" x2="{left}" y2="{_fmt(Y)}" stroke="#000000"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(Y + 4)}" text-anchor="end" font-family="sans-serif" font-size="11">{t:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" font-family="sans-serif" font-size="12">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, (label, pts) in enumerate(clean):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        if markers:
            for x, y in pts:
                out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="2.5" fill="{color}"/>')
        ly = top + 14 + 16 * i
        lx = left + pw + 10
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 25}" y="{ly}" font-family="sans-serif" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n")
    return path


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    return rows[0], rows[1:]


def _num(text):
    return float(text) if text != "" else math.nan


def plot_profile_csv(path, out_path):
    """Overlay every column of a ``profile_f<MHz>.csv`` against ``x``."""
    header, rows = _read_csv(path)
    if not header or header[0] != "x" or len(header) < 2:
        raise ValueError(f"{path}: expected columns x, reference, ...")
    cols = list(zip(*[[_num(v) for v in r] for r in rows])) if rows else [[] for _ in header]
    series = [(name, cols[0], cols[j]) for j, name in enumerate(header) if j > 0]
    title = Path(path).stem.replace("profile_f", "profile at ") + " MHz"
    return line_plot(series, title, "x (m)", "s(x) (m)", out_path)


def plot_err_curve_csv(path, out_path):
    """err versus frequency, one polyline per sweep point."""
    header, rows = _read_csv(path)
    need = {"point", "sweep_value", "frequency_hz", "err"}
    if not need.issubset(header):
        raise ValueError(f"{path}: missing columns {sorted(need - set(header))}")
    idx = {name: header.index(name) for name in need}
    curves = {}
    for r in rows:
        key = (int(r[idx["point"]]), r[idx["sweep_value"]])
        curves.setdefault(key, ([], []))
        curves[key][0].append(_num(r[idx["frequency_hz"]]) / 1e6)
        curves[key][1].append(_num(r[idx["err"]]))
    series = []
    for (point, value), (xs, ys) in sorted(curves.items()):
        label = f"point {point}" if value == "" else f"point {point} ({float(value):g})"
        series.append((label, xs, ys))
    return line_plot(series, "reconstruction error", "frequency (MHz)", "err", out_path, markers=True)


def plot_report(report_dir, out_dir=None):
    """Render every profile CSV and the err curve of a report directory."""
    report_dir = Path(report_dir)
    out_dir = report_dir if out_dir is None else Path(out_dir)
    if not (report_dir / "report.json").is_file():
        raise FileNotFoundError(f"{report_dir} has no report.json")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for prof in sorted(report_dir.glob("profile_f*.csv")):
        written.append(plot_profile_csv(prof, out_dir / (prof.stem + ".svg")))
    err = report_dir / "err_curve.csv"
    if err.is_file():
        header, rows = _read_csv(err)
        j = header.index("err") if "err" in header else None
        if j is not None and any(r[j] != "" for r in rows):
            written.append(plot_err_curve_csv(err, out_dir / "err_curve.svg"))
    return written
