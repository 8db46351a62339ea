"""t-SNE: perplexity-calibrated Gaussian affinities, Student-t low-dim
kernel, KL divergence minimized by gradient descent with momentum and
early exaggeration.

Pairwise quantities are dense (O(I^2) memory); this targets desk-scale
datasets, not Barnes-Hut territory.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationWarning, InvalidParameter, NumericalDivergence

SIGMA_MIN = 1e-20
SIGMA_MAX = 1e20
SIGMA_MAX_ITER = 200
PERPLEXITY_TOL = 1e-3


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    n_epochs: int = 500
    learning_rate: float = 200.0
    momentum: float = 0.8
    early_exaggeration_factor: float = 12.0
    early_exaggeration_epochs: int = 50
    seed: int = 0

    def validate(self, n_samples):
        if not 1.0 < self.perplexity < n_samples:
            raise InvalidParameter(
                f"perplexity must lie in (1, {n_samples}), got {self.perplexity}")
        if self.n_epochs < 1:
            raise InvalidParameter("n_epochs must be at least 1")
        if self.learning_rate <= 0:
            raise InvalidParameter("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise InvalidParameter("momentum must lie in [0, 1)")
        if self.early_exaggeration_factor <= 0:
            raise InvalidParameter("early_exaggeration_factor must be positive")


class AffinityMatrix:
    """Symmetric, grand-sum-one affinities plus the calibrated bandwidths."""

    def __init__(self, p, sigmas):
        self.p = np.asarray(p, dtype=np.float64)
        self.sigmas = np.asarray(sigmas, dtype=np.float64)
        self.p.flags.writeable = False
        self.sigmas.flags.writeable = False


def squared_distances(x):
    x = np.asarray(x, dtype=np.float64)
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def row_perplexity(p_row):
    """2^entropy of one conditional distribution (zero terms contribute 0)."""
    nz = p_row[p_row > 0]
    return float(2.0 ** (-np.sum(nz * np.log2(nz))))


def _conditional_row(d2_row, sigma):
    # max-shifted softmax so tiny sigmas don't underflow the nearest neighbor
    logits = -d2_row / (2.0 * sigma * sigma)
    logits -= logits.max()
    v = np.exp(logits)
    return v / v.sum()


def conditional_affinities(x, perplexity):
    """Per-row Gaussian conditionals with bandwidths binary-searched so every
    row's perplexity hits the target within 1e-3.

    Returns (conditional I x I with zero diagonal and unit row sums, sigmas).
    Rows that cannot reach the target (degenerate geometry) keep the bracket
    edge bandwidth and a CalibrationWarning is issued instead of failing.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not 1.0 < perplexity < n:
        raise InvalidParameter(f"perplexity must lie in (1, {n}), got {perplexity}")

    d2 = squared_distances(x)
    cond = np.zeros((n, n))
    sigmas = np.empty(n)
    others = ~np.eye(n, dtype=bool)

    for i in range(n):
        row = d2[i][others[i]]
        sigma, row_p, achieved = _calibrate_sigma(row, perplexity)
        if abs(achieved - perplexity) > PERPLEXITY_TOL:
            warnings.warn(
                f"row {i}: perplexity saturated at {achieved:.4f} "
                f"(target {perplexity}), sigma pinned to {sigma:.3e}",
                CalibrationWarning, stacklevel=2)
        sigmas[i] = sigma
        cond[i][others[i]] = row_p

    return cond, sigmas


def _calibrate_sigma(d2_row, target):
    lo, hi = None, None
    sigma = 1.0
    row_p = _conditional_row(d2_row, sigma)
    for _ in range(SIGMA_MAX_ITER):
        achieved = row_perplexity(row_p)
        if abs(achieved - target) <= PERPLEXITY_TOL:
            break
        if achieved > target:
            hi = sigma
            sigma = sigma / 2.0 if lo is None else (lo + hi) / 2.0
        else:
            lo = sigma
            sigma = sigma * 2.0 if hi is None else (lo + hi) / 2.0
        sigma = min(max(sigma, SIGMA_MIN), SIGMA_MAX)
        row_p = _conditional_row(d2_row, sigma)
        if sigma in (SIGMA_MIN, SIGMA_MAX):
            break
    return sigma, row_p, row_perplexity(row_p)


def symmetrize(conditional, sigmas=None):
    """(p_j|i + p_i|j) / 2N: symmetric with grand sum 1."""
    conditional = np.asarray(conditional, dtype=np.float64)
    n = conditional.shape[0]
    p = (conditional + conditional.T) / (2.0 * n)
    if sigmas is None:
        sigmas = np.ones(n)
    return AffinityMatrix(p, sigmas)


def low_dim_affinities(y):
    """Student-t kernel weights w and normalized affinities q for 2-D coords."""
    d2 = squared_distances(y)
    w = 1.0 / (1.0 + d2)
    np.fill_diagonal(w, 0.0)
    q = w / w.sum()
    return q, w


def kl_divergence(p, q):
    """sum over i != j of p log(p/q), natural log; p == 0 terms contribute 0."""
    p = p.p if isinstance(p, AffinityMatrix) else np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    mask = p > 0
    qc = np.maximum(q[mask], 1e-12)
    return float(np.sum(p[mask] * np.log(p[mask] / qc)))


def kl_gradient(p, q, w, y):
    """dKL/dy_i = 4 sum_j (p_ij - q_ij) w_ij (y_i - y_j), all rows at once."""
    m = (p - q) * w
    row = m.sum(axis=1)
    return 4.0 * (row[:, None] * y - m @ y)


def loss_trace_csv(trace):
    """KL values collected through ``on_epoch`` as CSV, for convergence
    inspection."""
    lines = ["epoch,kl"]
    lines += [f"{int(e)},{repr(float(v))}" for e, v in trace]
    return "\n".join(lines) + "\n"


def tsne_embed(x, cfg, on_epoch=None):
    """Embed rows of a preprocessed matrix into 2-D.

    Gradient descent with momentum on KL(P||Q); the affinities are
    exaggerated for the first ``early_exaggeration_epochs`` epochs. The
    returned coordinates are deterministic given the config seed.

    ``on_epoch(epoch, kl)`` is invoked once per epoch with the KL against the
    un-exaggerated affinities, for progress reporting and trace export.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 4:
        raise InvalidParameter("need at least 4 samples to embed")
    cfg.validate(n)

    cond, sigmas = conditional_affinities(x, cfg.perplexity)
    aff = symmetrize(cond, sigmas)
    p = aff.p

    rng = np.random.default_rng(cfg.seed)
    y = rng.normal(0.0, 1e-2, size=(n, 2))
    velocity = np.zeros_like(y)
    ee_end = min(cfg.early_exaggeration_epochs, cfg.n_epochs)

    # overflow inside an epoch surfaces as the non-finite check below
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.n_epochs):
            if epoch == ee_end:
                # fresh phase: drop momentum built against the exaggerated
                # objective, otherwise KL bumps when exaggeration switches off
                velocity = np.zeros_like(y)
            p_eff = p * cfg.early_exaggeration_factor if epoch < ee_end else p
            q, w = low_dim_affinities(y)
            grad = kl_gradient(p_eff, q, w, y)
            velocity = cfg.momentum * velocity - cfg.learning_rate * grad
            y = y + velocity
            y = y - y.mean(axis=0)
            if not np.all(np.isfinite(y)):
                raise NumericalDivergence(
                    f"coordinates diverged at epoch {epoch}; "
                    f"lower the learning rate")
            if on_epoch is not None:
                q_now, _ = low_dim_affinities(y)
                on_epoch(epoch, kl_divergence(p, q_now))

    return y
