import numpy as np
import pytest

from embedlens.errors import InvalidParameter, OutsideBbox
from embedlens.voronoi import VoronoiDiagram, compute_voronoi, locate_cell


def _brute_nearest(sites, q):
    d2 = np.sum((sites - q) ** 2, axis=1)
    return int(np.argmin(d2))  # argmin takes the lowest index on ties


def test_two_sites_split_by_bisector():
    d = compute_voronoi(np.array([[0.0, 0.0], [2.0, 0.0]]), bbox=(-1, -1, 3, 1))
    areas = d.cell_areas()
    assert np.allclose(areas, [4.0, 4.0])
    # the shared edge is the line x = 1
    for cell in d.cells:
        assert np.any(np.isclose(cell[:, 0], 1.0))


def test_four_corner_sites():
    sites = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    d = compute_voronoi(sites, bbox=(-1, -1, 2, 2))
    assert np.allclose(d.cell_areas(), [2.25] * 4)
    assert locate_cell(d, np.array([-0.5, -0.5])) == 0
    assert locate_cell(d, np.array([1.5, 1.5])) == 3


def test_random_sites_match_bruteforce_oracle(rng):
    sites = rng.uniform(-5.0, 5.0, size=(100, 2))
    d = compute_voronoi(sites)
    xmin, ymin, xmax, ymax = d.bbox
    queries = rng.uniform([xmin, ymin], [xmax, ymax], size=(1000, 2))
    for q in queries:
        assert locate_cell(d, q) == _brute_nearest(sites, q)


def test_cell_areas_tile_bbox(rng):
    sites = rng.normal(size=(60, 2))
    d = compute_voronoi(sites)
    assert abs(d.cell_areas().sum() - d.bbox_area()) <= 1e-6 * d.bbox_area()


def test_cells_contain_their_sites(rng):
    sites = rng.normal(size=(40, 2))
    d = compute_voronoi(sites)
    for i, cell in enumerate(d.cells):
        a = cell
        b = np.roll(cell, -1, axis=0)
        cross = ((b[:, 0] - a[:, 0]) * (sites[i][1] - a[:, 1])
                 - (b[:, 1] - a[:, 1]) * (sites[i][0] - a[:, 0]))
        assert np.all(cross >= -1e-9)


def test_cells_are_convex_and_ccw(rng):
    sites = rng.normal(size=(25, 2))
    d = compute_voronoi(sites)
    for cell in d.cells:
        a = cell
        b = np.roll(cell, -1, axis=0)
        c = np.roll(cell, -2, axis=0)
        cross = ((b[:, 0] - a[:, 0]) * (c[:, 1] - b[:, 1])
                 - (b[:, 1] - a[:, 1]) * (c[:, 0] - b[:, 0]))
        assert np.all(cross >= -1e-9)


def test_locate_query_at_site(rng):
    sites = rng.uniform(size=(30, 2))
    d = compute_voronoi(sites)
    for i in (0, 7, 29):
        assert locate_cell(d, sites[i]) == i


def test_locate_bisector_tie_goes_to_lower_index():
    sites = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [4.0, 4.0],
                      [2.0, 6.0], [6.0, 2.0], [6.0, 6.0], [0.0, 2.0]])
    d = compute_voronoi(sites, bbox=(-1, -1, 7, 7))
    q = 0.5 * (sites[2] + sites[7])  # on the 2/7 bisector
    assert locate_cell(d, q) == 2
    assert _brute_nearest(sites, q) == 2


def test_locate_outside_bbox():
    d = compute_voronoi(np.array([[0.0, 0.0], [1.0, 0.0]]), bbox=(-1, -1, 2, 1))
    with pytest.raises(OutsideBbox):
        locate_cell(d, np.array([5.0, 0.0]))


def test_collinear_sites_fall_back_to_slabs():
    sites = np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]])
    d = compute_voronoi(sites)
    assert abs(d.cell_areas().sum() - d.bbox_area()) <= 1e-9 * d.bbox_area()
    # slab boundaries at the adjacent-site bisectors
    q = np.array([0.4, 0.0])
    assert locate_cell(d, q) == 0
    q = np.array([3.0, 0.0])
    assert locate_cell(d, q) == 1


def test_duplicate_sites_each_get_a_cell(rng):
    sites = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    d = compute_voronoi(sites)
    assert d.n_sites == 4
    assert len(d.cells) == 4
    assert all(len(c) >= 3 for c in d.cells)
    assert abs(d.cell_areas().sum() - d.bbox_area()) <= 1e-6 * d.bbox_area()


def test_single_site_owns_whole_bbox():
    d = compute_voronoi(np.array([[3.0, 4.0]]))
    assert len(d.cells) == 1
    assert abs(d.cell_areas()[0] - d.bbox_area()) <= 1e-6 * d.bbox_area()


def test_deterministic_output(rng):
    sites = rng.normal(size=(50, 2))
    d1 = compute_voronoi(sites)
    d2 = compute_voronoi(sites)
    for c1, c2 in zip(d1.cells, d2.cells):
        assert np.array_equal(c1, c2)


def test_bbox_must_contain_sites():
    with pytest.raises(InvalidParameter):
        compute_voronoi(np.array([[0.0, 0.0], [10.0, 0.0]]), bbox=(-1, -1, 5, 1))


def test_doc_round_trip(rng):
    sites = rng.normal(size=(20, 2))
    d = compute_voronoi(sites)
    back = VoronoiDiagram.from_doc(d.to_doc())
    assert np.array_equal(back.sites, d.sites)
    assert back.bbox == d.bbox
    for c1, c2 in zip(back.cells, d.cells):
        assert np.array_equal(c1, c2)


def test_delaunay_path_used_for_large_inputs(rng):
    # above the full-clip threshold: same oracle agreement must hold
    sites = rng.uniform(-3.0, 3.0, size=(150, 2))
    d = compute_voronoi(sites)
    queries = rng.uniform(-3.0, 3.0, size=(300, 2))
    for q in queries:
        assert locate_cell(d, q) == _brute_nearest(sites, q)
    assert abs(d.cell_areas().sum() - d.bbox_area()) <= 1e-6 * d.bbox_area()
