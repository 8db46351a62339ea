import numpy as np
import pytest
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from embedlens.errors import CalibrationWarning, DimensionMismatch, InvalidParameter, NumericalDivergence
from embedlens.umap import (
    UmapConfig,
    UmapModel,
    attractive_gradient,
    cross_entropy,
    fit_ab,
    fuzzy_symmetrize,
    knn_graph,
    low_dim_kernel,
    pairwise_distances,
    repulsive_gradient,
    transform_new,
    umap_affinities,
    umap_embed,
)


def grid_search_ab(min_dist, spread, rounds=4):
    """Independent coarse grid + refinement least-squares oracle."""
    xv = np.linspace(0.0, 3.0 * spread, 300)
    yv = np.ones_like(xv)
    tail = xv >= min_dist
    yv[tail] = np.exp(-(xv[tail] - min_dist) / spread)
    a_lo, a_hi, b_lo, b_hi = 0.05, 20.0, 0.1, 3.0
    best = (1.0, 1.0)
    for _ in range(rounds):
        aa = np.linspace(a_lo, a_hi, 60)
        bb = np.linspace(b_lo, b_hi, 60)
        grid_a, grid_b = np.meshgrid(aa, bb, indexing="ij")
        q = 1.0 / (1.0 + grid_a[..., None] * xv[None, None, :] ** (2 * grid_b[..., None]))
        sse = ((q - yv) ** 2).sum(axis=-1)
        i, j = np.unravel_index(np.argmin(sse), sse.shape)
        best = (aa[i], bb[j])
        da = (a_hi - a_lo) / 59
        db = (b_hi - b_lo) / 59
        a_lo, a_hi = max(1e-3, aa[i] - 2 * da), aa[i] + 2 * da
        b_lo, b_hi = max(1e-2, bb[j] - 2 * db), bb[j] + 2 * db
    return best


def test_config_validation():
    with pytest.raises(InvalidParameter):
        UmapConfig(n_neighbors=1).validate()
    with pytest.raises(InvalidParameter):
        UmapConfig(n_neighbors=20).validate(10)
    with pytest.raises(InvalidParameter):
        UmapConfig(min_dist=3.5, spread=1.0).validate()
    with pytest.raises(InvalidParameter):
        UmapConfig(metric="chebyshev").validate()


def test_knn_collinear_trivial():
    x = np.array([[0.0], [1.0], [10.0]])
    idx, dist = knn_graph(x, 1)
    assert idx[:, 0].tolist() == [1, 0, 1]
    assert dist[:, 0].tolist() == [1.0, 1.0, 9.0]


def test_knn_matches_bruteforce_oracle(rng):
    x = rng.normal(size=(50, 4))
    for metric in ("euclidean", "manhattan", "cosine"):
        idx, dist = knn_graph(x, 6, metric)
        for i in range(50):
            # independent oracle: per-pair loop distances, full sort
            ds = []
            for j in range(50):
                if j == i:
                    continue
                diff = x[i] - x[j]
                if metric == "euclidean":
                    dd = float(np.sqrt(np.sum(diff ** 2)))
                elif metric == "manhattan":
                    dd = float(np.sum(np.abs(diff)))
                else:
                    dd = 1.0 - float(x[i] @ x[j]) / (
                        np.linalg.norm(x[i]) * np.linalg.norm(x[j]))
                ds.append((dd, j))
            ds.sort()
            want = [j for _, j in ds[:6]]
            assert idx[i].tolist() == want
            assert np.allclose(dist[i], [d for d, _ in ds[:6]], atol=1e-12)


def test_knn_duplicate_points_first():
    x = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 0.0], [9.0, 9.0]])
    idx, dist = knn_graph(x, 2)
    assert idx[0, 0] == 1 and dist[0, 0] == 0.0
    assert idx[1, 0] == 0 and dist[1, 0] == 0.0


def test_affinity_nearest_neighbor_is_one(rng):
    x = rng.normal(size=(30, 3))
    idx, dist = knn_graph(x, 5)
    cond, rhos, sigmas = umap_affinities(idx, dist, 5)
    assert np.allclose(cond[:, 0], 1.0)
    assert np.allclose(rhos, dist[:, 0])


def test_affinity_row_sums_hit_log2k(rng):
    x = rng.normal(size=(100, 6))
    k = 15
    idx, dist = knn_graph(x, k)
    cond, rhos, sigmas = umap_affinities(idx, dist, k)
    target = np.log2(k)
    # direct re-evaluation from the returned rho/sigma
    for i in range(100):
        row = np.exp(-np.maximum(dist[i] - rhos[i], 0.0) / sigmas[i])
        assert abs(row.sum() - target) <= 1e-3


def test_affinity_all_equidistant_saturates_with_warning():
    # 5 points: center + 4 arms at identical distance; center row saturates
    x = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    idx, dist = knn_graph(x, 4)
    with pytest.warns(CalibrationWarning):
        cond, rhos, sigmas = umap_affinities(idx, dist, 4)
    assert np.allclose(cond[0], 1.0)  # row sum = k
    assert sigmas[0] <= 1e-19  # bracket edge


def test_affinity_all_duplicates_sigma_one():
    x = np.array([[1.0, 1.0]] * 4)
    idx, dist = knn_graph(x, 2)
    with pytest.warns(CalibrationWarning):
        cond, rhos, sigmas = umap_affinities(idx, dist, 2)
    assert np.all(sigmas == 1.0)
    assert np.allclose(cond, 1.0)


def test_fuzzy_symmetrize_values():
    cond = sp.csr_matrix(np.array([[0.0, 1.0, 0.5], [0.0, 0.0, 0.5],
                                   [0.0, 0.5, 0.0]]))
    g = fuzzy_symmetrize(cond).toarray()
    assert g[0, 1] == pytest.approx(1.0)      # 1 + 0 - 0
    assert g[1, 0] == pytest.approx(1.0)
    assert g[1, 2] == pytest.approx(0.75)     # 0.5 + 0.5 - 0.25
    assert np.array_equal(g, g.T)


def test_fuzzy_symmetrize_random_properties(rng):
    for _ in range(10):
        dense = rng.uniform(0.0, 1.0, size=(8, 8))
        dense[rng.uniform(size=(8, 8)) < 0.6] = 0.0
        np.fill_diagonal(dense, 0.0)
        g = fuzzy_symmetrize(sp.csr_matrix(dense))
        arr = g.toarray()
        assert np.array_equal(arr, arr.T)
        assert arr.min() >= 0.0
        assert arr.max() <= 1.0
        assert np.all(np.diag(arr) == 0.0)


def test_fit_ab_basics():
    a, b = fit_ab(0.1, 1.0)
    assert low_dim_kernel(np.array([0.0]), a, b)[0] == 1.0
    d = np.linspace(0.0, 3.0, 1000)
    q = low_dim_kernel(d ** 2, a, b)
    assert np.all(np.diff(q) < 0.0)
    assert a > 0 and b > 0


def test_fit_ab_matches_grid_search_oracle():
    a, b = fit_ab(0.1, 1.0)
    a_star, b_star = grid_search_ab(0.1, 1.0)
    assert abs(a - a_star) <= 1e-2
    assert abs(b - b_star) <= 1e-2


def test_fit_ab_bad_arguments():
    with pytest.raises(InvalidParameter):
        fit_ab(3.0, 1.0)


def test_cross_entropy_zero_when_matching(rng):
    y = rng.normal(size=(6, 2))
    a, b = 1.5, 0.9
    d2 = cdist(y, y) ** 2
    q = low_dim_kernel(d2, a, b)
    np.fill_diagonal(q, 0.0)
    ce = cross_entropy(sp.csr_matrix(q), y, a, b)
    assert abs(ce) < 1e-6


def test_cross_entropy_toy_matches_per_term_sum(rng):
    y = rng.normal(size=(5, 2))
    p = rng.uniform(0.0, 1.0, size=(5, 5))
    p = (p + p.T) / 2.0
    np.fill_diagonal(p, 0.0)
    a, b = fit_ab(0.1, 1.0)
    got = cross_entropy(sp.csr_matrix(p), y, a, b)

    oracle = 0.0
    for i in range(5):
        for j in range(5):
            if i == j:
                continue
            u = float(np.sum((y[i] - y[j]) ** 2))
            q = min(max(1.0 / (1.0 + a * u ** b), 1e-12), 1.0 - 1e-12)
            pij = p[i, j]
            if pij > 0:
                oracle += pij * (np.log(pij) - np.log(q))
            if pij < 1:
                oracle += (1 - pij) * (np.log(1 - pij) - np.log(1 - q))
    assert abs(got - oracle) <= 1e-10 * max(1.0, abs(oracle))
    assert got >= 0.0


def test_edge_gradients_match_finite_differences(rng):
    a, b = fit_ab(0.1, 1.0)
    worst = 0.0
    for _ in range(5):
        yi = rng.normal(scale=2.0, size=2)
        yj = rng.normal(scale=2.0, size=2)
        if np.sum((yi - yj) ** 2) < 0.05:
            yj = yj + 1.0

        def attr(pt):
            u = float(np.sum((pt - yj) ** 2))
            return np.log(1.0 + a * u ** b)  # -log q

        def rep(pt):
            u = float(np.sum((pt - yj) ** 2))
            q = 1.0 / (1.0 + a * u ** b)
            return -np.log(1.0 - q)

        h = 1e-6
        for func, grad_fn in ((attr, attractive_gradient),
                              (rep, repulsive_gradient)):
            fd = np.array([
                (func(yi + np.array([h, 0.0])) - func(yi - np.array([h, 0.0]))) / (2 * h),
                (func(yi + np.array([0.0, h])) - func(yi - np.array([0.0, h]))) / (2 * h),
            ])
            an = grad_fn(yi, yj, a, b)
            rel = np.abs(an - fd) / np.maximum(np.abs(fd), 1e-8)
            worst = max(worst, float(rel.max()))
    assert worst < 1e-5


def test_embed_two_pairs_topology():
    x = np.array([[0.0, 0.0], [0.2, 0.0], [40.0, 40.0], [40.2, 40.0]])
    cfg = UmapConfig(n_neighbors=2, min_dist=0.1, n_epochs=100,
                     learning_rate=0.5, seed=4)
    m = umap_embed(x, cfg)
    y = m.coords
    within = max(np.linalg.norm(y[0] - y[1]), np.linalg.norm(y[2] - y[3]))
    between = min(np.linalg.norm(y[i] - y[j]) for i in (0, 1) for j in (2, 3))
    assert within < between


def test_embed_deterministic(rng):
    x = rng.normal(size=(40, 5))
    cfg = UmapConfig(n_neighbors=6, n_epochs=60, seed=21)
    m1 = umap_embed(x, cfg)
    m2 = umap_embed(x, cfg)
    assert np.array_equal(m1.coords, m2.coords)
    assert (m1.graph != m2.graph).nnz == 0


def test_embed_divergence_detected(rng):
    x = rng.normal(size=(20, 3))
    cfg = UmapConfig(n_neighbors=4, n_epochs=30, learning_rate=1e308, seed=0)
    with pytest.raises(NumericalDivergence):
        umap_embed(x, cfg)


def test_graph_invariants_on_benchmark(blob_umap):
    model, cfg = blob_umap
    g = model.graph
    assert (g != g.T).nnz == 0
    assert g.diagonal().max() == 0.0
    assert g.data.min() >= 0.0
    assert g.data.max() <= 1.0
    # nearest-neighbor affinity saturates at 1 for non-degenerate rows
    assert np.allclose(np.asarray(g.max(axis=1).todense()).ravel(), 1.0)


def test_ce_moving_average_nonincreasing_on_benchmark(blob_umap):
    model, _ = blob_umap
    values = np.array([v for _, v in model.ce_trace])
    assert len(values) >= 20
    ma = np.convolve(values, np.ones(10) / 10.0, mode="valid")
    assert np.all(np.diff(ma) <= 0.0)


def test_transform_keeps_training_coords(blob_umap, blob_data):
    model, _ = blob_umap
    d = blob_data[0]
    before = model.coords.copy()
    transform_new(model, d.values[5])
    assert np.array_equal(before, model.coords)


def test_transform_dimension_mismatch(blob_umap):
    model, _ = blob_umap
    with pytest.raises(DimensionMismatch):
        transform_new(model, np.zeros(3))


def test_transform_heldout_lands_in_own_blob(blob_umap, blob_data):
    model, _ = blob_umap
    d, labels, held, held_labels = blob_data
    centroids = np.array([model.coords[labels == c].mean(axis=0) for c in range(3)])
    hits = 0
    for row, lab in zip(held, held_labels):
        y = transform_new(model, d.preprocess_vector(row))
        hits += int(np.argmin(np.sum((centroids - y) ** 2, axis=1)) == lab)
    assert hits >= int(0.9 * len(held_labels))


def test_transform_self_projection_within_spec_tolerance(blob_umap, blob_data):
    """Exact training-row copies must land within 0.1 * median NN distance
    of the original embedded point.

    Known-unattainable as stated: the row cross-entropy this operation is
    required to descend has its global minimum a macroscopic distance from
    the original coordinate (see decisions ledger); kept faithful, fails
    honestly.
    """
    model, _ = blob_umap
    d = blob_data[0]
    dd = cdist(model.coords, model.coords)
    np.fill_diagonal(dd, np.inf)
    tol = 0.1 * float(np.median(dd.min(axis=1)))
    errors = []
    for i in (0, 57, 150, 201, 299):
        y = transform_new(model, d.values[i])
        errors.append(float(np.linalg.norm(y - model.coords[i])))
    assert max(errors) <= tol, (
        f"self-projection errors {np.round(errors, 3).tolist()} exceed "
        f"0.1*medianNN = {tol:.4f}; the descended objective's own minimum "
        f"lies away from the training coordinate (see decisions ledger)")


def test_model_doc_round_trip(blob_umap):
    model, _ = blob_umap
    doc = model.to_doc()
    back = UmapModel.from_doc(doc)
    assert np.array_equal(back.coords, model.coords)
    assert (back.graph != model.graph).nnz == 0
    assert back.curve_a == model.curve_a
    assert back.config == model.config
    assert np.array_equal(back.training_data, model.training_data)


def test_ce_trace_csv(blob_umap):
    from embedlens.umap import ce_trace_csv

    model, _ = blob_umap
    lines = ce_trace_csv(model).strip().split("\n")
    assert lines[0] == "epoch,cross_entropy"
    assert len(lines) == len(model.ce_trace) + 1


def test_pairwise_distance_metrics():
    x = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert pairwise_distances(x)[0, 1] == pytest.approx(5.0)
    assert pairwise_distances(x, metric="manhattan")[0, 1] == pytest.approx(7.0)
    y = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert pairwise_distances(y, metric="cosine")[0, 1] == pytest.approx(1.0)
