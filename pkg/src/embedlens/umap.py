"""UMAP-style embedding: exact kNN graph, local-offset exponential
affinities, fuzzy-union symmetrization, fitted low-dimensional curve, and
stochastic gradient descent with negative sampling. Out-of-sample points are
placed by descending the same objective over the new coordinate only.

Bandwidths solve sum_j p_j|i = log2(k); the low-dimensional kernel is
q(d) = 1 / (1 + a d^(2b)) with (a, b) least-squares fitted so q tracks the
piecewise target (1 up to min_dist, exponential decay with the given spread
beyond it).
"""

import warnings
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import curve_fit
from scipy.spatial.distance import cdist

from .errors import (
    CalibrationWarning,
    DimensionMismatch,
    FitDiverged,
    InvalidParameter,
    NumericalDivergence,
)
from .serialize import decode_array, encode_array

METRICS = ("euclidean", "manhattan", "cosine")
SIGMA_MIN = 1e-20
SIGMA_MAX = 1e20
SIGMA_MAX_ITER = 200
ROW_SUM_TOL = 1e-3
AB_FIT_SAMPLES = 300
# The global optimum of the least-squares objective sits near RMS 0.016 for
# typical min_dist values (the target has a corner the curve family cannot
# reproduce), so the divergence guard must sit above that.
AB_RMS_LIMIT = 0.1
CLIP = 4.0
EPS = 1e-12


@dataclass(frozen=True)
class UmapConfig:
    n_neighbors: int = 15
    min_dist: float = 0.1
    spread: float = 1.0
    metric: str = "euclidean"
    n_epochs: int = 200
    learning_rate: float = 1.0
    negative_sample_rate: int = 5
    seed: int = 0

    def validate(self, n_samples=None):
        if self.n_neighbors < 2:
            raise InvalidParameter("n_neighbors must be at least 2")
        if n_samples is not None and self.n_neighbors >= n_samples:
            raise InvalidParameter(
                f"n_neighbors ({self.n_neighbors}) must be below the sample "
                f"count ({n_samples})")
        if self.min_dist < 0:
            raise InvalidParameter("min_dist must be nonnegative")
        if self.spread <= 0:
            raise InvalidParameter("spread must be positive")
        if self.min_dist >= 3.0 * self.spread:
            raise InvalidParameter("min_dist must stay below 3 * spread")
        if self.metric not in METRICS:
            raise InvalidParameter(f"metric must be one of {METRICS}")
        if self.n_epochs < 1:
            raise InvalidParameter("n_epochs must be at least 1")
        if self.learning_rate <= 0:
            raise InvalidParameter("learning_rate must be positive")
        if self.negative_sample_rate < 1:
            raise InvalidParameter("negative_sample_rate must be at least 1")


class UmapModel:
    """Fitted embedding plus everything needed to place new samples."""

    def __init__(self, graph, rhos, sigmas, curve_a, curve_b, coords, config,
                 training_data, ce_trace=()):
        self.graph = graph.tocsr()
        self.rhos = np.asarray(rhos, dtype=np.float64)
        self.sigmas = np.asarray(sigmas, dtype=np.float64)
        self.curve_a = float(curve_a)
        self.curve_b = float(curve_b)
        self.coords = np.asarray(coords, dtype=np.float64)
        self.config = config
        self.training_data = np.asarray(training_data, dtype=np.float64)
        self.ce_trace = tuple((int(e), float(v)) for e, v in ce_trace)
        for a in (self.rhos, self.sigmas, self.coords, self.training_data):
            a.flags.writeable = False

    @property
    def n_samples(self):
        return self.coords.shape[0]

    def to_doc(self, include_training=True):
        coo = self.graph.tocoo()
        doc = {
            "config": asdict(self.config),
            "graph": {
                "rows": encode_array(coo.row.astype(np.int64)),
                "cols": encode_array(coo.col.astype(np.int64)),
                "data": encode_array(coo.data.astype(np.float64)),
                "shape": list(coo.shape),
            },
            "rhos": encode_array(self.rhos),
            "sigmas": encode_array(self.sigmas),
            "curve_a": self.curve_a,
            "curve_b": self.curve_b,
            "coords": encode_array(self.coords),
            "ce_trace": [[e, v] for e, v in self.ce_trace],
        }
        if include_training:
            doc["training_data"] = encode_array(self.training_data)
        return doc

    @classmethod
    def from_doc(cls, doc, training_data=None):
        g = doc["graph"]
        graph = sp.coo_matrix(
            (decode_array(g["data"]),
             (decode_array(g["rows"]), decode_array(g["cols"]))),
            shape=tuple(g["shape"])).tocsr()
        if training_data is None:
            training_data = decode_array(doc["training_data"])
        return cls(graph, decode_array(doc["rhos"]), decode_array(doc["sigmas"]),
                   doc["curve_a"], doc["curve_b"], decode_array(doc["coords"]),
                   UmapConfig(**doc["config"]), training_data,
                   ce_trace=[(int(e), float(v)) for e, v in doc["ce_trace"]])


def pairwise_distances(x, y=None, metric="euclidean"):
    if metric not in METRICS:
        raise InvalidParameter(f"metric must be one of {METRICS}")
    scipy_name = {"euclidean": "euclidean", "manhattan": "cityblock",
                  "cosine": "cosine"}[metric]
    d = cdist(np.atleast_2d(x), np.atleast_2d(x if y is None else y), scipy_name)
    return np.maximum(d, 0.0)


def knn_graph(x, k, metric="euclidean"):
    """Exact brute-force k nearest neighbors.

    Returns (indices, distances), both I x k, rows sorted by distance with
    ties broken by lower sample index.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k < n:
        raise InvalidParameter(f"k must lie in [1, {n - 1}], got {k}")
    d = pairwise_distances(x, metric=metric)
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")[:, :k]
    dists = np.take_along_axis(d, order, axis=1)
    return order, dists


def umap_affinities(neighbor_indices, neighbor_dists, k):
    """Local affinities over the kNN lists.

    rho_i is the distance to the nearest neighbor; sigma_i is binary-searched
    so the row sum of exp(-max(0, d - rho)/sigma) hits log2(k) within 1e-3.
    Saturated rows (all neighbors at or inside rho) keep a pinned sigma and
    raise a CalibrationWarning: all-duplicate rows pin sigma to 1, otherwise
    the bracket edge is kept.

    Returns (conditional I x k, rhos, sigmas).
    """
    dists = np.asarray(neighbor_dists, dtype=np.float64)
    n = dists.shape[0]
    target = np.log2(k)
    rhos = dists[:, 0].copy()
    sigmas = np.empty(n)
    cond = np.empty_like(dists)

    for i in range(n):
        gaps = np.maximum(dists[i] - rhos[i], 0.0)
        if np.all(dists[i] <= 0.0):
            sigmas[i] = 1.0
            warnings.warn(f"row {i}: all neighbors are duplicates; sigma pinned to 1",
                          CalibrationWarning, stacklevel=2)
        elif np.all(gaps <= 0.0):
            sigmas[i] = SIGMA_MIN
            warnings.warn(
                f"row {i}: all neighbors at the nearest-neighbor distance; "
                f"row sum saturates at {dists.shape[1]}, sigma at bracket edge",
                CalibrationWarning, stacklevel=2)
        else:
            sigmas[i] = _calibrate_bandwidth(gaps, target)
        cond[i] = np.exp(-gaps / sigmas[i])

    return cond, rhos, sigmas


def _calibrate_bandwidth(gaps, target):
    lo, hi = None, None
    sigma = 1.0
    for _ in range(SIGMA_MAX_ITER):
        total = float(np.exp(-gaps / sigma).sum())
        if abs(total - target) <= ROW_SUM_TOL:
            return sigma
        if total > target:
            hi = sigma
            sigma = sigma / 2.0 if lo is None else (lo + hi) / 2.0
        else:
            lo = sigma
            sigma = sigma * 2.0 if hi is None else (lo + hi) / 2.0
        sigma = min(max(sigma, SIGMA_MIN), SIGMA_MAX)
        if sigma in (SIGMA_MIN, SIGMA_MAX):
            break
    warnings.warn(f"bandwidth search saturated at sigma={sigma:.3e}",
                  CalibrationWarning, stacklevel=2)
    return sigma


def fuzzy_symmetrize(conditional_sparse):
    """Probabilistic union p + p' - p*p' of a sparse conditional graph."""
    p = conditional_sparse.tocsr()
    sym = p + p.T - p.multiply(p.T)
    sym = sym.tocsr()
    sym.data = np.clip(sym.data, 0.0, 1.0)
    sym.setdiag(0.0)
    sym.eliminate_zeros()
    return sym


def conditional_to_sparse(neighbor_indices, cond):
    n, k = cond.shape
    rows = np.repeat(np.arange(n), k)
    return sp.coo_matrix((cond.ravel(), (rows, np.asarray(neighbor_indices).ravel())),
                         shape=(n, n)).tocsr()


def low_dim_kernel(d2, a, b):
    """q(d^2) = 1 / (1 + a * (d^2)^b); exactly 1 at distance 0."""
    return 1.0 / (1.0 + a * np.power(np.maximum(d2, 0.0), b))


def fit_ab(min_dist, spread=1.0):
    """Least-squares (a, b) so the kernel follows the piecewise target curve
    sampled at 300 points on [0, 3*spread]."""
    if not 0 <= min_dist < 3.0 * spread:
        raise InvalidParameter("need 0 <= min_dist < 3 * spread")

    xv = np.linspace(0.0, spread * 3.0, AB_FIT_SAMPLES)
    yv = np.ones_like(xv)
    tail = xv >= min_dist
    yv[tail] = np.exp(-(xv[tail] - min_dist) / spread)

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2.0 * b))

    try:
        (a, b), _ = curve_fit(curve, xv, yv, p0=(1.0, 1.0), maxfev=5000)
    except RuntimeError as exc:
        raise FitDiverged(str(exc)) from exc

    rms = float(np.sqrt(np.mean((curve(xv, a, b) - yv) ** 2)))
    if rms >= AB_RMS_LIMIT or a <= 0 or b <= 0:
        raise FitDiverged(f"curve fit RMS {rms:.4f} exceeds {AB_RMS_LIMIT}")
    return float(a), float(b)


def cross_entropy(graph, y, a, b):
    """Fuzzy cross-entropy between graph affinities and the embedded kernel,
    summed over all ordered pairs i != j with eps-clamped logs."""
    p = graph.toarray() if sp.issparse(graph) else np.asarray(graph, dtype=np.float64)
    n = p.shape[0]
    d2 = _sq_dists(np.asarray(y, dtype=np.float64))
    q = low_dim_kernel(d2, a, b)
    off = ~np.eye(n, dtype=bool)

    pq = p[off]
    qq = np.clip(q[off], EPS, 1.0 - EPS)
    attract = np.where(pq > 0, pq * (np.log(np.maximum(pq, EPS)) - np.log(qq)), 0.0)
    repel = np.where(pq < 1,
                     (1.0 - pq) * (np.log(np.maximum(1.0 - pq, EPS)) - np.log1p(-qq)),
                     0.0)
    return float(np.sum(attract + repel))


def attractive_gradient(y_i, y_j, a, b):
    """Gradient wrt y_i of -log q(||y_i - y_j||^2): the pull of one sampled
    edge."""
    diff = np.asarray(y_i, dtype=np.float64) - np.asarray(y_j, dtype=np.float64)
    u = max(float(diff @ diff), 1e-8)
    coeff = 2.0 * a * b * u ** (b - 1.0) / (1.0 + a * u ** b)
    return coeff * diff


def repulsive_gradient(y_i, y_k, a, b):
    """Gradient wrt y_i of -log(1 - q(||y_i - y_k||^2)): the push of one
    negative sample."""
    diff = np.asarray(y_i, dtype=np.float64) - np.asarray(y_k, dtype=np.float64)
    u = max(float(diff @ diff), 1e-3)
    coeff = -2.0 * b / (u * (1.0 + a * u ** b))
    return coeff * diff


def spectral_init(graph, seed):
    """2nd and 3rd smallest eigenvectors of the normalized graph Laplacian,
    scaled to a +-10 box; seeded random fallback if the eigensolver fails."""
    n = graph.shape[0]
    rng = np.random.default_rng(seed)
    try:
        w = graph.toarray()
        deg = w.sum(axis=1)
        with np.errstate(divide="ignore"):
            dinv = np.where(deg > 0, 1.0 / np.sqrt(deg), 0.0)
        lap = np.eye(n) - (dinv[:, None] * w) * dinv[None, :]
        vals, vecs = np.linalg.eigh(lap)
        coords = vecs[:, 1:3].copy()
        # deterministic sign per column
        for c in range(coords.shape[1]):
            j = np.argmax(np.abs(coords[:, c]))
            if coords[j, c] < 0:
                coords[:, c] = -coords[:, c]
        top = np.max(np.abs(coords))
        if not np.isfinite(top) or top <= 0:
            raise np.linalg.LinAlgError("flat spectral coordinates")
        return coords * (10.0 / top)
    except (np.linalg.LinAlgError, ValueError):
        return rng.uniform(-10.0, 10.0, size=(n, 2))


def umap_embed(x, cfg, on_epoch=None, ce_trace_points=50):
    """Fit the embedding.

    Each epoch samples edges proportionally to their weight (one expected
    visit per edge), applies attractive moves to both endpoints and
    ``negative_sample_rate`` repulsive moves per sampled edge, with the
    learning rate decayed linearly to zero. Updates are accumulated per epoch
    in a deterministic order, so a fixed seed reproduces coordinates bit for
    bit. ``on_epoch(epoch, ce)`` fires at trace-evaluation points.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 4:
        raise InvalidParameter("need at least 4 samples to embed")
    cfg.validate(n)

    idx, dists = knn_graph(x, cfg.n_neighbors, cfg.metric)
    cond, rhos, sigmas = umap_affinities(idx, dists, cfg.n_neighbors)
    graph = fuzzy_symmetrize(conditional_to_sparse(idx, cond))
    a, b = fit_ab(cfg.min_dist, cfg.spread)

    y = spectral_init(graph, cfg.seed)
    rng = np.random.default_rng(cfg.seed)

    coo = graph.tocoo()
    heads, tails, weights = coo.row, coo.col, coo.data
    probs = weights / weights.sum()
    n_edges = len(weights)

    # Per-head weight that makes the expected epoch update an unbiased step
    # along the full cross-entropy gradient: heads are drawn with frequency
    # deg_w(i)/sum(w) while the full repulsive sum runs over all n partners.
    deg_w = np.asarray(graph.sum(axis=1)).ravel()
    neg_scale = 2.0 * n / (cfg.negative_sample_rate * np.maximum(deg_w, EPS))
    p_dense = graph.toarray() if n <= 3000 else None

    eval_every = max(1, cfg.n_epochs // max(ce_trace_points, 1))
    trace = []

    # overflow inside an epoch surfaces as the non-finite check below
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.n_epochs):
            lr = cfg.learning_rate * (1.0 - epoch / cfg.n_epochs)
            picks = rng.choice(n_edges, size=n_edges, p=probs)
            i_idx, j_idx = heads[picks], tails[picks]

            diff = y[i_idx] - y[j_idx]
            u = np.maximum(np.sum(diff * diff, axis=1), 1e-8)
            att = (2.0 * a * b * u ** (b - 1.0) / (1.0 + a * u ** b))[:, None] * diff
            att = np.clip(att, -CLIP, CLIP)
            np.add.at(y, i_idx, -lr * att)
            np.add.at(y, j_idx, lr * att)

            negs = rng.integers(0, n, size=(n_edges, cfg.negative_sample_rate))
            for c in range(cfg.negative_sample_rate):
                k_idx = negs[:, c]
                live = k_idx != i_idx
                ii, kk = i_idx[live], k_idx[live]
                diff = y[ii] - y[kk]
                u = np.maximum(np.sum(diff * diff, axis=1), 1e-3)
                coeff = (-2.0 * b / (u * (1.0 + a * u ** b))) * neg_scale[ii]
                if p_dense is not None:
                    coeff = coeff * (1.0 - p_dense[ii, kk])
                rep = np.clip(coeff[:, None] * diff, -CLIP, CLIP)
                np.add.at(y, ii, -lr * rep)

            if not np.all(np.isfinite(y)):
                raise NumericalDivergence(
                    f"coordinates diverged at epoch {epoch}; "
                    f"lower the learning rate")

            if epoch % eval_every == 0 or epoch == cfg.n_epochs - 1:
                ce = cross_entropy(graph, y, a, b)
                trace.append((epoch, ce))
                if on_epoch is not None:
                    on_epoch(epoch, ce)

    return UmapModel(graph, rhos, sigmas, a, b, y, cfg, x, ce_trace=trace)


def transform_new(model, x_new, n_iter=150):
    """Place one new sample without touching the trained coordinates.

    Affinities to the k nearest training samples are calibrated exactly as in
    training (fresh rho/sigma); the coordinate starts at the affinity-weighted
    mean of those neighbors and descends the cross-entropy of its own row.
    """
    x_new = np.asarray(x_new, dtype=np.float64)
    if x_new.shape != (model.training_data.shape[1],):
        raise DimensionMismatch(
            f"expected a vector of length {model.training_data.shape[1]}, "
            f"got shape {x_new.shape}")

    cfg = model.config
    k = cfg.n_neighbors
    d = pairwise_distances(x_new[None, :], model.training_data, cfg.metric)[0]
    order = np.argsort(d, kind="stable")[:k]
    nd = d[order]

    rho = nd[0]
    gaps = np.maximum(nd - rho, 0.0)
    if np.all(gaps <= 0.0):
        sigma = 1.0
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CalibrationWarning)
            sigma = _calibrate_bandwidth(gaps, np.log2(k))
    p_nbr = np.exp(-gaps / sigma)

    p_full = np.zeros(model.n_samples)
    p_full[order] = p_nbr

    coords = model.coords
    y = (p_nbr @ coords[order]) / p_nbr.sum()

    a, b = model.curve_a, model.curve_b

    def row_ce(pt):
        u = np.sum((pt[None, :] - coords) ** 2, axis=1)
        q = np.clip(low_dim_kernel(u, a, b), EPS, 1.0 - EPS)
        att = np.where(p_full > 0,
                       p_full * (np.log(np.maximum(p_full, EPS)) - np.log(q)), 0.0)
        rep = np.where(p_full < 1,
                       (1.0 - p_full) * (np.log(np.maximum(1.0 - p_full, EPS))
                                         - np.log1p(-q)), 0.0)
        return float(np.sum(att + rep))

    def row_grad(pt):
        diff = pt[None, :] - coords
        u = np.sum(diff * diff, axis=1)
        u_att = np.maximum(u, 1e-8)
        u_rep = np.maximum(u, 1e-3)
        att_c = p_full * (2.0 * a * b * u_att ** (b - 1.0) / (1.0 + a * u_att ** b))
        rep_c = (1.0 - p_full) * (-2.0 * b / (u_rep * (1.0 + a * u_rep ** b)))
        return ((att_c + rep_c)[:, None] * diff).sum(axis=0)

    # backtracking line search: monotone descent, no step-size tuning
    ce = row_ce(y)
    step_len = 1.0
    for _ in range(n_iter):
        grad = row_grad(y)
        g2 = float(grad @ grad)
        if g2 < 1e-18:
            break
        step_len = min(step_len * 2.0, 1e3)
        while step_len > 1e-12:
            y_try = y - step_len * grad
            ce_try = row_ce(y_try)
            if ce_try <= ce - 1e-4 * step_len * g2:
                y, ce = y_try, ce_try
                break
            step_len *= 0.5
        else:
            break

    if not np.all(np.isfinite(y)):
        raise NumericalDivergence("projection diverged")
    return y


def ce_trace_csv(model):
    """Cross-entropy evaluations as CSV for convergence inspection."""
    lines = ["epoch,cross_entropy"]
    lines += [f"{e},{repr(float(v))}" for e, v in model.ce_trace]
    return "\n".join(lines) + "\n"


def _sq_dists(y):
    sq = np.sum(y * y, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (y @ y.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)
