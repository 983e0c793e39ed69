"""Static SVG biplot; plain text output so the bytes depend only on the inputs."""

from xml.sax.saxutils import escape

import numpy as np

SIZE = 640
MARGIN = 60


def _num(x):
    return f"{x:.3f}"


def biplot_svg(rows, categories, category_labels, d, dims=(0, 1), title="biplot"):
    """Scatter of row points (circles) and labelled category points (squares).

    Parameters
    ----------
    rows : ndarray, shape (n, p)
    categories : ndarray, shape (K, p)
    category_labels : sequence of str
    d : ndarray
        Singular values, shown in the axis annotations.
    dims : pair of int
        Zero-based dimensions to plot.
    """
    a, b = dims
    pts = np.vstack([rows[:, [a, b]], categories[:, [a, b]]])
    span = float(np.max(np.abs(pts))) if pts.size else 0.0
    span = span if span > 0 else 1.0
    half = (SIZE - 2 * MARGIN) / 2.0
    centre = SIZE / 2.0

    def xy(p):
        return centre + half * p[0] / span, centre - half * p[1] / span

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<title>{escape(title)}</title>',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{_num(centre)}" x2="{SIZE - MARGIN}" y2="{_num(centre)}" '
        'stroke="#999" stroke-width="1"/>',
        f'<line x1="{_num(centre)}" y1="{MARGIN}" x2="{_num(centre)}" y2="{SIZE - MARGIN}" '
        'stroke="#999" stroke-width="1"/>',
        f'<text x="{SIZE - MARGIN}" y="{_num(centre + 20)}" text-anchor="end" font-size="12">'
        f'dim {a + 1} (d = {d[a]:.4g})</text>',
        f'<text x="{_num(centre + 6)}" y="{MARGIN - 10}" font-size="12">'
        f'dim {b + 1} (d = {d[b]:.4g})</text>',
    ]
    for p in rows[:, [a, b]]:
        x, y = xy(p)
        out.append(f'<circle class="row" cx="{_num(x)}" cy="{_num(y)}" r="2.5" fill="#4477aa" '
                   'fill-opacity="0.6"/>')
    for label, p in zip(category_labels, categories[:, [a, b]]):
        x, y = xy(p)
        out.append(f'<rect class="category" x="{_num(x - 3)}" y="{_num(y - 3)}" width="6" '
                   'height="6" fill="#cc3311"/>')
        out.append(f'<text x="{_num(x + 5)}" y="{_num(y - 5)}" font-size="10" fill="#cc3311">'
                   f'{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
