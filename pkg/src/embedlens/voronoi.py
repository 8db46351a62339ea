"""Clipped Voronoi tessellation of the 2-D embedding plane.

Cells are built by half-plane clipping of the bounding box: against the
bisectors of Delaunay neighbors when a triangulation exists (that subset is
sufficient - a Voronoi cell is bounded by bisectors of Delaunay neighbors
only), and against every other site for small or degenerate inputs, which
also covers collinear layouts where the diagram collapses to slabs.
Coincident sites are jittered deterministically so every input index keeps
its own cell.
"""

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .errors import InvalidParameter, OutsideBbox
from .serialize import decode_array, encode_array

PAD_FRACTION = 0.05
JITTER_FRACTION = 1e-9
FULL_CLIP_LIMIT = 40


class VoronoiDiagram:
    """Sites, one clipped convex CCW cell per site, and the clip rectangle."""

    def __init__(self, sites, cells, bbox):
        self.sites = np.asarray(sites, dtype=np.float64)
        self.cells = [np.asarray(c, dtype=np.float64) for c in cells]
        self.bbox = tuple(float(v) for v in bbox)
        self.sites.flags.writeable = False
        for c in self.cells:
            c.flags.writeable = False

    @property
    def n_sites(self):
        return self.sites.shape[0]

    def cell_areas(self):
        return np.array([_polygon_area(c) for c in self.cells])

    def bbox_area(self):
        xmin, ymin, xmax, ymax = self.bbox
        return (xmax - xmin) * (ymax - ymin)

    def to_json(self):
        return {
            "sites": [[float(x), float(y)] for x, y in self.sites],
            "cells": [[[float(x), float(y)] for x, y in c] for c in self.cells],
            "bbox": list(self.bbox),
        }

    def to_doc(self):
        return {
            "sites": encode_array(self.sites),
            "cells": [[[float(x), float(y)] for x, y in c] for c in self.cells],
            "bbox": list(self.bbox),
        }

    @classmethod
    def from_doc(cls, doc):
        return cls(decode_array(doc["sites"]),
                   [np.array(c, dtype=np.float64).reshape(-1, 2) for c in doc["cells"]],
                   doc["bbox"])


def default_bbox(sites):
    """Extent of the sites padded by 5% per side (degenerate extents get a
    minimum pad so the rectangle always has positive area)."""
    sites = np.asarray(sites, dtype=np.float64)
    xmin, ymin = sites.min(axis=0)
    xmax, ymax = sites.max(axis=0)
    span = max(xmax - xmin, ymax - ymin, 1.0)
    pad_x = PAD_FRACTION * max(xmax - xmin, 0.1 * span)
    pad_y = PAD_FRACTION * max(ymax - ymin, 0.1 * span)
    return (xmin - pad_x, ymin - pad_y, xmax + pad_x, ymax + pad_y)


def compute_voronoi(sites, bbox=None, seed=0):
    """Tessellate the bbox into one convex cell per site."""
    sites = np.atleast_2d(np.asarray(sites, dtype=np.float64))
    if sites.ndim != 2 or sites.shape[1] != 2:
        raise InvalidParameter("sites must be an I x 2 array")
    if sites.shape[0] < 1:
        raise InvalidParameter("need at least one site")
    if not np.all(np.isfinite(sites)):
        raise InvalidParameter("sites must be finite")

    if bbox is None:
        bbox = default_bbox(sites)
    xmin, ymin, xmax, ymax = (float(v) for v in bbox)
    if not (xmax > xmin and ymax > ymin):
        raise InvalidParameter("bbox must have positive area")
    if (np.any(sites[:, 0] < xmin) or np.any(sites[:, 0] > xmax)
            or np.any(sites[:, 1] < ymin) or np.any(sites[:, 1] > ymax)):
        raise InvalidParameter("bbox must contain all sites")

    work = _deduplicate(sites, (xmin, ymin, xmax, ymax), seed)
    box_poly = np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]])
    n = work.shape[0]

    if n == 1:
        return VoronoiDiagram(sites, [box_poly], (xmin, ymin, xmax, ymax))

    neighbor_lists = None
    if n > FULL_CLIP_LIMIT:
        try:
            tri = Delaunay(work)
            indptr, indices = tri.vertex_neighbor_vertices
            neighbor_lists = [indices[indptr[i]:indptr[i + 1]] for i in range(n)]
        except QhullError:
            neighbor_lists = None

    everyone = np.arange(n)
    cells = []
    for i in range(n):
        if neighbor_lists is not None and len(neighbor_lists[i]) > 0:
            cell = _clip_cell(work, i, neighbor_lists[i], box_poly)
            if not _contains(cell, work[i]):
                cell = _clip_cell(work, i, everyone[everyone != i], box_poly)
        else:
            cell = _clip_cell(work, i, everyone[everyone != i], box_poly)
        cells.append(_ensure_ccw(cell))

    return VoronoiDiagram(sites, cells, (xmin, ymin, xmax, ymax))


def locate_cell(diagram, query):
    """Index of the cell enclosing the query point.

    The winner is the cell the query is deepest inside; boundary ties go to
    the lower site index, matching nearest-site semantics.
    """
    q = np.asarray(query, dtype=np.float64)
    xmin, ymin, xmax, ymax = diagram.bbox
    if not (xmin <= q[0] <= xmax and ymin <= q[1] <= ymax):
        raise OutsideBbox(f"query {q.tolist()} lies outside the bbox")

    diag = float(np.hypot(xmax - xmin, ymax - ymin))
    tol = 1e-12 * diag
    best, best_margin = 0, -np.inf
    for i, cell in enumerate(diagram.cells):
        margin = _inside_margin(cell, q)
        if margin > best_margin + tol:
            best, best_margin = i, margin
    return best


def _deduplicate(sites, bbox, seed):
    """Jitter repeated coordinates so every index owns a distinct site."""
    xmin, ymin, xmax, ymax = bbox
    diag = float(np.hypot(xmax - xmin, ymax - ymin))
    work = sites.copy()
    rng = np.random.default_rng(seed)
    seen = {}
    for i, pt in enumerate(map(tuple, work)):
        bump = 1.0
        while pt in seen:
            offset = rng.normal(size=2)
            offset *= JITTER_FRACTION * diag * bump / np.linalg.norm(offset)
            cand = np.clip(work[i] + offset, [xmin, ymin], [xmax, ymax])
            pt = tuple(cand)
            work[i] = cand
            bump *= 2.0
        seen[pt] = i
    return work


def _clip_cell(points, i, against, box_poly):
    poly = box_poly
    site = points[i]
    for j in against:
        mid = 0.5 * (site + points[j])
        normal = points[j] - site
        poly = _clip_halfplane(poly, mid, normal)
        if len(poly) == 0:
            break
    return np.asarray(poly, dtype=np.float64).reshape(-1, 2)


def _clip_halfplane(poly, m, normal):
    # keep {x : (x - m) . normal <= 0} (the side of the bisector nearer the site)
    if len(poly) == 0:
        return poly
    vals = (np.asarray(poly) - m) @ normal
    out = []
    n = len(poly)
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        va, vb = vals[k], vals[(k + 1) % n]
        if va <= 0:
            out.append(a)
            if vb > 0:
                out.append(a + (va / (va - vb)) * (b - a))
        elif vb <= 0:
            out.append(a + (va / (va - vb)) * (b - a))
    return _drop_repeats(out)


def _drop_repeats(poly):
    if not len(poly):
        return []
    out = [poly[0]]
    for p in poly[1:]:
        if not np.allclose(p, out[-1], rtol=0.0, atol=1e-14):
            out.append(p)
    if len(out) > 1 and np.allclose(out[0], out[-1], rtol=0.0, atol=1e-14):
        out.pop()
    return out


def _polygon_area(poly):
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _ensure_ccw(poly):
    if len(poly) >= 3 and _polygon_area(poly) < 0:
        return poly[::-1].copy()
    return poly


def _contains(poly, point, tol=0.0):
    return _inside_margin(poly, point) >= -tol


def _inside_margin(poly, q):
    """Smallest signed edge distance; positive strictly inside a CCW convex
    polygon."""
    if len(poly) < 3:
        return -np.inf
    a = poly
    b = np.roll(poly, -1, axis=0)
    edge = b - a
    lengths = np.hypot(edge[:, 0], edge[:, 1])
    lengths[lengths == 0] = 1.0
    cross = edge[:, 0] * (q[1] - a[:, 1]) - edge[:, 1] * (q[0] - a[:, 0])
    return float(np.min(cross / lengths))
