"""Static SVG render of a 2-d placement."""

from __future__ import annotations

from xml.sax.saxutils import escape

from pinarrange.model import Instance, Placement

CELL = 20
PAD = 1


def placement_svg(inst: Instance, placement: Placement, title: str = "") -> str:
    """Pins as filled squares, free vertices as circles, edges as lines.

    Line opacity is proportional to weight (heaviest edge fully opaque).
    Only the first two coordinates are drawn.
    """
    pts = placement.assignment
    xs = [p[0] for p in pts.values()]
    ys = [p[1] if len(p) > 1 else 0 for p in pts.values()]
    x0, y0 = min(xs) - PAD, min(ys) - PAD
    width = (max(xs) - x0 + PAD + 1) * CELL
    height = (max(ys) - y0 + PAD + 1) * CELL

    def centre(v: int) -> tuple[float, float]:
        p = pts[v]
        y = p[1] if len(p) > 1 else 0
        # flip y so that larger coordinates are drawn higher up
        return (p[0] - x0 + 0.5) * CELL, height - (y - y0 + 0.5) * CELL

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    wmax = max((w for _, _, w in inst.edges), default=0.0)
    for u, v, w in inst.edges:
        if wmax <= 0 or w <= 0:
            continue
        (ax, ay), (bx, by) = centre(u), centre(v)
        out.append(
            f'<line x1="{ax:.1f}" y1="{ay:.1f}" x2="{bx:.1f}" y2="{by:.1f}" '
            f'stroke="#1f4e9c" stroke-width="2" stroke-opacity="{w / wmax:.3f}"/>'
        )
    terminals = set(inst.terminals)
    half = CELL * 0.4
    for v in sorted(pts):
        cx, cy = centre(v)
        if v in terminals:
            out.append(
                f'<rect x="{cx - half:.1f}" y="{cy - half:.1f}" width="{2 * half:.1f}" '
                f'height="{2 * half:.1f}" fill="#333333"/>'
            )
        else:
            out.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{half:.1f}" fill="#e07b39" stroke="#333333"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
