"""Self-contained SVG log-log plot of gradient queries against the Hessian budget."""
from __future__ import annotations

import csv
import math
from xml.sax.saxutils import escape

from ..errors import CsvFormatError
from .sweep import FIELDS

WIDTH, HEIGHT = 640, 440
MARGIN = 70
REFERENCE_SLOPE = -0.5


def read_points(path):
    """(n_H, grad_queries) pairs from a ResultRow CSV; error rows are skipped."""
    points = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != FIELDS:
            raise CsvFormatError("header does not match the result schema", line=1)
        col_n, col_g, col_t = FIELDS.index("n_H"), FIELDS.index("grad_queries"), FIELDS.index("terminated")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(FIELDS):
                raise CsvFormatError(f"expected {len(FIELDS)} fields, got {len(row)}", line=line_no)
            if row[col_t].startswith("error"):
                continue
            try:
                n_H, grads = int(row[col_n]), int(row[col_g])
            except ValueError as exc:
                raise CsvFormatError(f"non-numeric n_H or grad_queries: {exc}", line=line_no) from exc
            if n_H < 1 or grads < 1:
                raise CsvFormatError("n_H and grad_queries must be positive", line=line_no)
            points.append((n_H, grads))
    return points


def _range(values):
    lo, hi = math.floor(min(values)), math.ceil(max(values))
    return (lo, hi) if hi > lo else (lo, lo + 1)


def render_svg(points, title="gradient queries vs Hessian budget"):
    lx = [math.log10(n) for n, _ in points]
    ly = [math.log10(g) for _, g in points]
    x_lo, x_hi = _range(lx) if points else (0, 1)
    ref = None
    if points:
        # reference line through the centroid of the data in log-log coordinates
        cx, cy = sum(lx) / len(lx), sum(ly) / len(ly)
        x1, x2 = float(x_lo), float(x_hi)
        ref = (x1, cy + REFERENCE_SLOPE * (x1 - cx), x2, cy + REFERENCE_SLOPE * (x2 - cx))
    y_lo, y_hi = _range(ly + [ref[1], ref[3]]) if points else (0, 1)
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(v):
        return MARGIN + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v):
        return HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<title>{escape(title)}</title>',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<g class="axes" stroke="black" stroke-width="1">'
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}"/>'
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}"/></g>',
    ]
    ticks = ['<g class="ticks" font-family="sans-serif" font-size="11">']
    for e in range(x_lo, x_hi + 1):
        ticks.append(f'<text x="{px(e):.2f}" y="{HEIGHT - MARGIN + 18}" text-anchor="middle">1e{e}</text>')
    for e in range(y_lo, y_hi + 1):
        ticks.append(f'<text x="{MARGIN - 8}" y="{py(e) + 4:.2f}" text-anchor="end">1e{e}</text>')
    ticks.append("</g>")
    out.extend(ticks)
    out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 20}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">Hessian budget n_H</text>')
    out.append(f'<text x="18" y="{HEIGHT / 2}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="13" transform="rotate(-90 18 {HEIGHT / 2})">gradient queries</text>')
    for x, y in zip(lx, ly):
        out.append(f'<circle class="marker" cx="{px(x):.2f}" cy="{py(y):.2f}" r="4" fill="steelblue" '
                   f'data-log-x="{x!r}" data-log-y="{y!r}"/>')
    if ref is not None:
        x1, y1, x2, y2 = ref
        out.append(
            f'<line class="reference" x1="{px(x1):.2f}" y1="{py(y1):.2f}" x2="{px(x2):.2f}" '
            f'y2="{py(y2):.2f}" stroke="firebrick" stroke-dasharray="6 4" '
            f'data-slope="{REFERENCE_SLOPE!r}" data-log-x1="{x1!r}" data-log-y1="{y1!r}" '
            f'data-log-x2="{x2!r}" data-log-y2="{y2!r}"/>')
        out.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN - 10}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11" fill="firebrick">slope -1/2</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_tradeoff_plot(csv_path, out_path):
    points = read_points(csv_path)
    svg = render_svg(points)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return len(points)
