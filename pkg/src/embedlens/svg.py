"""Standalone SVG rendering of a Voronoi diagram.

Output is deterministic for a fixed diagram: cells are emitted in site
order with fixed 6-decimal coordinates, so renders can be compared
byte-for-byte.
"""

from .colormap import values_to_colors

SVG_SIZE = 800.0
MARGIN = 10.0


def _fmt(v):
    return f"{v:.6f}"


def voronoi_svg(diagram, values=None, colors=None, title=None):
    """Render the diagram; cell fills come from ``colors`` or are mapped
    from ``values`` through the embedded lookup table (grey when neither
    is given)."""
    if colors is None:
        colors = (values_to_colors(values) if values is not None
                  else ["#cccccc"] * diagram.n_sites)
    if len(colors) != diagram.n_sites:
        raise ValueError("one fill color per site required")

    xmin, ymin, xmax, ymax = diagram.bbox
    span = max(xmax - xmin, ymax - ymin)
    scale = (SVG_SIZE - 2 * MARGIN) / span
    width = (xmax - xmin) * scale + 2 * MARGIN
    height = (ymax - ymin) * scale + 2 * MARGIN

    def to_screen(p):
        # SVG y grows downward
        return (MARGIN + (p[0] - xmin) * scale,
                height - (MARGIN + (p[1] - ymin) * scale))

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
    ]
    if title:
        lines.append(f"<title>{title}</title>")

    for i, cell in enumerate(diagram.cells):
        if len(cell) < 3:
            continue
        pts = " ".join(f"{_fmt(sx)},{_fmt(sy)}"
                       for sx, sy in (to_screen(p) for p in cell))
        lines.append(f'<polygon points="{pts}" fill="{colors[i]}" '
                     f'stroke="#ffffff" stroke-width="0.5"/>')

    for i, site in enumerate(diagram.sites):
        sx, sy = to_screen(site)
        lines.append(f'<circle cx="{_fmt(sx)}" cy="{_fmt(sy)}" r="1.5" '
                     f'fill="#000000"/>')

    lines.append("</svg>")
    return "\n".join(lines) + "\n"
