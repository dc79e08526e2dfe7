"""Hand-written SVG 1.1 charts: correlation heatmap, ranking bars, line chart.

Output is a pure function of the inputs (fixed number formatting, no
timestamps) so repeated runs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

NEGATIVE = (33, 102, 172)
POSITIVE = (178, 24, 43)
ACTUAL_COLOR = "#1f77b4"
PREDICTED_COLOR = "#d62728"
FONT = 'font-family="Helvetica, Arial, sans-serif"'


def _escape(text):
    return (
        str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def _num(v):
    return f"{v:.2f}"


def diverging_color(value):
    """Map a correlation in [-1, 1] to a blue-white-red ramp."""
    t = max(-1.0, min(1.0, float(value)))
    end = POSITIVE if t >= 0 else NEGATIVE
    a = abs(t)
    rgb = [round(255 + (c - 255) * a) for c in end]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _document(width, height, body, title):
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{_num(width / 2)}" y="28" text-anchor="middle" font-size="18" {FONT}>{_escape(title)}</text>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def heatmap_svg(labels, matrix, title="Spearman correlation"):
    n = len(labels)
    cell = 70
    left, top = 190, 60
    width = left + n * cell + 110
    height = top + n * cell + 170
    body = []
    for i in range(n):
        for j in range(n):
            v = float(matrix[i][j])
            x, y = left + j * cell, top + i * cell
            text_color = "#ffffff" if abs(v) > 0.6 else "#000000"
            body.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{diverging_color(v)}" stroke="#ffffff"/>'
            )
            body.append(
                f'<text x="{_num(x + cell / 2)}" y="{_num(y + cell / 2 + 4)}" text-anchor="middle" '
                f'font-size="12" fill="{text_color}" {FONT}>{v:.2f}</text>'
            )
    for i, label in enumerate(labels):
        body.append(
            f'<text x="{left - 8}" y="{_num(top + i * cell + cell / 2 + 4)}" text-anchor="end" '
            f'font-size="12" {FONT}>{_escape(label)}</text>'
        )
        cx, cy = left + i * cell + cell / 2, top + n * cell + 10
        body.append(
            f'<text x="{_num(cx)}" y="{_num(cy)}" text-anchor="end" font-size="12" '
            f'transform="rotate(-45 {_num(cx)} {_num(cy)})" {FONT}>{_escape(label)}</text>'
        )
    # colour bar
    bar_x, bar_h = left + n * cell + 30, n * cell
    steps = 40
    for s in range(steps):
        v = 1.0 - 2.0 * (s + 0.5) / steps
        body.append(
            f'<rect x="{bar_x}" y="{_num(top + s * bar_h / steps)}" width="20" '
            f'height="{_num(bar_h / steps + 0.5)}" fill="{diverging_color(v)}"/>'
        )
    for v, y in ((1.0, top), (0.0, top + bar_h / 2), (-1.0, top + bar_h)):
        body.append(f'<text x="{bar_x + 26}" y="{_num(y + 4)}" font-size="11" {FONT}>{v:+.1f}</text>')
    return _document(width, height, body, title)


def ranking_svg(ranking, title="Correlation with energy_efficiency"):
    """Horizontal bars for ``[(feature, rho), ...]`` in the given order."""
    bar_h, gap = 26, 10
    left, top = 200, 60
    half = 220
    zero_x = left + half
    width = left + 2 * half + 80
    height = top + len(ranking) * (bar_h + gap) + 50
    body = [f'<line x1="{zero_x}" y1="{top - 6}" x2="{zero_x}" '
            f'y2="{top + len(ranking) * (bar_h + gap)}" stroke="#333333"/>']
    for i, (name, rho) in enumerate(ranking):
        y = top + i * (bar_h + gap)
        length = abs(rho) * half
        x = zero_x if rho >= 0 else zero_x - length
        body.append(
            f'<rect x="{_num(x)}" y="{y}" width="{_num(length)}" height="{bar_h}" fill="{diverging_color(rho)}" '
            f'stroke="#555555"/>'
        )
        body.append(
            f'<text x="{left - 10}" y="{y + bar_h / 2 + 4:.2f}" text-anchor="end" font-size="12" '
            f'{FONT}>{_escape(name)}</text>'
        )
        tx = zero_x + length + 6 if rho >= 0 else zero_x - length - 6
        anchor = "start" if rho >= 0 else "end"
        body.append(
            f'<text x="{_num(tx)}" y="{y + bar_h / 2 + 4:.2f}" text-anchor="{anchor}" font-size="11" '
            f'{FONT}>{rho:.4f}</text>'
        )
    axis_y = top + len(ranking) * (bar_h + gap) + 16
    for v in (-1.0, -0.5, 0.0, 0.5, 1.0):
        body.append(
            f'<text x="{_num(zero_x + v * half)}" y="{axis_y}" text-anchor="middle" font-size="11" '
            f'{FONT}>{v:+.1f}</text>'
        )
    return _document(width, height, body, title)


def line_chart_svg(actual, predicted, title="Predicted vs actual", y_label="energy_efficiency"):
    """Two polylines (actual, predicted) over sample index, with axes and legend.

    The polylines are the only ``<polyline>`` elements in the document.
    """
    n = len(actual)
    if n == 0 or len(predicted) != n:
        raise ValueError("actual and predicted must be non-empty and of equal length")
    width, height = 960, 480
    left, right, top, bottom = 70, 170, 50, 60
    pw, ph = width - left - right, height - top - bottom
    values = [float(v) for v in actual] + [float(v) for v in predicted]
    lo, hi = min(values), max(values)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def px(i):
        return left + (pw / 2 if n == 1 else i * pw / (n - 1))

    def py(v):
        return top + ph - (v - lo) / (hi - lo) * ph

    body = [
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="#000000"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="#000000"/>',
    ]
    for k in range(6):
        v = lo + k * (hi - lo) / 5
        y = py(v)
        body.append(f'<line x1="{left - 4}" y1="{_num(y)}" x2="{left}" y2="{_num(y)}" stroke="#000000"/>')
        body.append(
            f'<text x="{left - 8}" y="{_num(y + 4)}" text-anchor="end" font-size="11" {FONT}>{v:.3f}</text>'
        )
    for k in range(min(n, 6)):
        i = round(k * (n - 1) / max(1, min(n, 6) - 1))
        x = px(i)
        body.append(f'<line x1="{_num(x)}" y1="{top + ph}" x2="{_num(x)}" y2="{top + ph + 4}" stroke="#000000"/>')
        body.append(
            f'<text x="{_num(x)}" y="{top + ph + 18}" text-anchor="middle" font-size="11" {FONT}>{i}</text>'
        )
    body.append(
        f'<text x="{_num(left + pw / 2)}" y="{height - 16}" text-anchor="middle" font-size="13" '
        f'{FONT}>sample index</text>'
    )
    body.append(
        f'<text x="18" y="{_num(top + ph / 2)}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {_num(top + ph / 2)})" {FONT}>{_escape(y_label)}</text>'
    )
    for series, color, name in ((actual, ACTUAL_COLOR, "actual"), (predicted, PREDICTED_COLOR, "predicted")):
        pts = " ".join(f"{_num(px(i))},{_num(py(float(v)))}" for i, v in enumerate(series))
        body.append(
            f'<polyline class="series" data-series="{name}" points="{pts}" fill="none" '
            f'stroke="{color}" stroke-width="1.6"/>'
        )
    lx = left + pw + 20
    for k, (color, name) in enumerate(((ACTUAL_COLOR, "actual"), (PREDICTED_COLOR, "predicted"))):
        y = top + 10 + k * 22
        body.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 28}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{lx + 36}" y="{y + 4}" font-size="12" {FONT}>{name}</text>')
    return _document(width, height, body, title)


def write_svg(path, text):
    Path(path).write_text(text, encoding="utf-8")
