"""Deterministic SVG emission for complexes and barcodes.

Hand-written SVG keeps plot artifacts diffable: elements are emitted in
sorted simplex order with fixed-precision coordinates and no timestamps.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .errors import InputError
from .persistence import Barcode

# compact blue -> yellow -> red heat ramp
_RAMP = [
    (0.0, (33, 62, 151)),
    (0.35, (87, 158, 186)),
    (0.65, (238, 204, 103)),
    (1.0, (186, 38, 33)),
]


def heat_color(t: float) -> str:
    """Hex color for t in [0, 1] along the heat ramp."""
    t = min(1.0, max(0.0, t))
    for (t0, c0), (t1, c1) in zip(_RAMP, _RAMP[1:]):
        if t <= t1:
            s = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            rgb = tuple(round(a + s * (b - a)) for a, b in zip(c0, c1))
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#ba2621"


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _document(width: float, height: float, body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" '
        f'height="{height:g}" viewBox="0 0 {width:g} {height:g}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def complex_svg(positions: dict, weights: dict, path=None, *,
                fill_triangles: bool = False, size: float = 640.0,
                margin: float = 24.0,
                vertex_values: Optional[dict] = None) -> str:
    """Draw the 1-skeleton (and optionally filled 2-simplices) of a complex.

    ``positions`` maps 1-tuples to 2D vertex coordinates; ``weights`` maps
    simplices to their filtration values, which drive the heat coloring
    unless per-vertex scalars are supplied instead.
    """
    verts = {k[0]: np.asarray(v, float) for k, v in positions.items() if len(k) == 1}
    if not verts:
        raise InputError("no vertex positions supplied")
    for v in verts.values():
        if v.shape != (2,):
            raise InputError("complex plotting needs 2D coordinates; "
                             "project first (e.g. spectral_projection)")

    pts = np.asarray(list(verts.values()))
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    scale = (size - 2 * margin) / span

    def place(p):
        return (margin + (p[0] - lo[0]) * scale,
                margin + (hi[1] - p[1]) * scale)  # flip y for SVG

    if vertex_values is not None:
        vals = {i: float(vertex_values[i]) for i in verts}
        vmin, vmax = min(vals.values()), max(vals.values())
    else:
        vals = None
        wvals = [float(w) for w in weights.values()]
        vmin, vmax = min(wvals), max(wvals)
    vspan = vmax - vmin if vmax > vmin else 1.0

    def color_of(simplex):
        if vals is not None:
            t = (sum(vals[i] for i in simplex) / len(simplex) - vmin) / vspan
        else:
            t = (float(weights[simplex]) - vmin) / vspan
        return heat_color(t)

    body = []
    if fill_triangles:
        for key in sorted(k for k in weights if len(k) == 3):
            a, b, c = (place(verts[i]) for i in key)
            body.append(
                f'<polygon points="{_fmt(a[0])},{_fmt(a[1])} {_fmt(b[0])},{_fmt(b[1])} '
                f'{_fmt(c[0])},{_fmt(c[1])}" fill="{color_of(key)}" fill-opacity="0.35" '
                'stroke="none"/>'
            )
    for key in sorted(k for k in weights if len(k) == 2):
        a, b = (place(verts[i]) for i in key)
        body.append(
            f'<line x1="{_fmt(a[0])}" y1="{_fmt(a[1])}" x2="{_fmt(b[0])}" '
            f'y2="{_fmt(b[1])}" stroke="{color_of(key)}" stroke-width="1.1"/>'
        )
    for key in sorted(k for k in weights if len(k) == 1):
        x, y = place(verts[key[0]])
        body.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.2" fill="{color_of(key)}"/>'
        )
    doc = _document(size, size, body)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(doc)
    return doc


def barcode_svg(barcode: Barcode, path=None, *, width: float = 640.0,
                row_height: float = 7.0, margin: float = 34.0) -> str:
    """Horizontal bars grouped by dimension, x in -log-density units.

    Infinite bars run to the right edge and end in an arrowhead.
    """
    finite = [b for b in barcode.intervals if not math.isinf(b.death)]
    births = [b.birth for b in barcode.intervals]
    if barcode.intervals:
        xmin = min(births)
        xmax = max([b.death for b in finite] + births)
        if xmax <= xmin:
            xmax = xmin + 1.0
        pad = 0.05 * (xmax - xmin)
        xmin, xmax = xmin - pad, xmax + pad
    else:
        xmin, xmax = 0.0, 1.0
    xspan = xmax - xmin

    dims = sorted({b.dim for b in barcode.intervals})
    body = []
    y = margin
    colors = ["#213e97", "#ba2621", "#2c7a3f", "#8e5eb8", "#946c21"]
    for dim in dims:
        bars = barcode.in_dim(dim)
        body.append(
            f'<text x="6" y="{_fmt(y + 4)}" font-size="11" '
            f'font-family="monospace">H{dim}</text>'
        )
        for b in bars:
            x0 = margin + (b.birth - xmin) / xspan * (width - 2 * margin)
            color = colors[dim % len(colors)]
            if math.isinf(b.death):
                x1 = width - margin * 0.4
                body.append(
                    f'<line x1="{_fmt(x0)}" y1="{_fmt(y)}" x2="{_fmt(x1)}" '
                    f'y2="{_fmt(y)}" stroke="{color}" stroke-width="2.4"/>'
                )
                body.append(
                    f'<polygon points="{_fmt(x1)},{_fmt(y - 3.2)} '
                    f'{_fmt(x1 + 6)},{_fmt(y)} {_fmt(x1)},{_fmt(y + 3.2)}" '
                    f'fill="{color}"/>'
                )
            else:
                x1 = margin + (b.death - xmin) / xspan * (width - 2 * margin)
                body.append(
                    f'<line x1="{_fmt(x0)}" y1="{_fmt(y)}" x2="{_fmt(x1)}" '
                    f'y2="{_fmt(y)}" stroke="{color}" stroke-width="2.4"/>'
                )
            y += row_height
        y += row_height  # gap between dimension groups
    height = max(y + margin * 0.5, 80.0)

    axis_y = height - margin * 0.4
    body.append(
        f'<line x1="{_fmt(margin)}" y1="{_fmt(axis_y)}" '
        f'x2="{_fmt(width - margin)}" y2="{_fmt(axis_y)}" stroke="#444" '
        'stroke-width="1"/>'
    )
    for frac in (0.0, 0.5, 1.0):
        x = margin + frac * (width - 2 * margin)
        val = xmin + frac * xspan
        body.append(
            f'<text x="{_fmt(x)}" y="{_fmt(axis_y + 12)}" font-size="10" '
            f'font-family="monospace" text-anchor="middle">{val:.3g}</text>'
        )
    doc = _document(width, height, body)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(doc)
    return doc
