"""Per-sample PCA diagnostics: Q-residuals, Hotelling's T2 and contributions.

Conventions, fixed once here: loadings are column-orthonormal (J x A), so the
subspace projector is P P' and Q(x) = x (I - P P') x'. Contribution vectors
are t L^(-1/2) P' (a J-vector); the eigenvalue matrix L uses eigenvalues of
X'X without a sample-size divisor, a uniform rescaling that leaves variable
rankings untouched. Components with negligible eigenvalue are excluded from
inverse scalings and recorded.
"""

import io

import numpy as np

from .errors import ComponentOutOfRange, DimensionMismatch, EmptySelection
from .serialize import decode_array, encode_array

EIG_EXCLUDE_REL_TOL = 1e-12
CENTROID_IDENTITY_TOL = 1e-8


def _retained(eigenvalues):
    """Mask of components kept in inverse-eigenvalue scalings."""
    if eigenvalues.size == 0:
        return np.zeros(0, dtype=bool)
    return eigenvalues > EIG_EXCLUDE_REL_TOL * eigenvalues.max()


class DiagnosticsBundle:
    """Q, T2 and contribution rows for every training sample, at a fixed
    component count."""

    def __init__(self, q_total, q_per_pc, t2, contributions, excluded_components=()):
        self.q_total = np.asarray(q_total, dtype=np.float64)
        self.q_per_pc = np.asarray(q_per_pc, dtype=np.float64)
        self.t2 = np.asarray(t2, dtype=np.float64)
        self.contributions = np.asarray(contributions, dtype=np.float64)
        self.excluded_components = tuple(int(k) for k in excluded_components)
        for a in (self.q_total, self.q_per_pc, self.t2, self.contributions):
            a.flags.writeable = False

    @property
    def n_samples(self):
        return self.q_total.shape[0]

    @property
    def n_components(self):
        return self.q_per_pc.shape[1]

    def to_doc(self):
        return {
            "q_total": encode_array(self.q_total),
            "q_per_pc": encode_array(self.q_per_pc),
            "t2": encode_array(self.t2),
            "contributions": encode_array(self.contributions),
            "excluded_components": list(self.excluded_components),
        }

    @classmethod
    def from_doc(cls, doc):
        return cls(decode_array(doc["q_total"]), decode_array(doc["q_per_pc"]),
                   decode_array(doc["t2"]), decode_array(doc["contributions"]),
                   doc["excluded_components"])


def q_residual(m, x, components="all"):
    """Squared residual norm of x (original units) after projection.

    ``components`` is either "all" (span of all A loadings) or a single
    component index k.
    """
    xt = m.preprocess_vector(x)
    if components == "all":
        p = m.loadings
    else:
        k = int(components)
        if not 0 <= k < m.n_components:
            raise ComponentOutOfRange(f"component {k} not in [0, {m.n_components})")
        p = m.loadings[:, k:k + 1]
    r = xt - (xt @ p) @ p.T
    return max(float(r @ r), 0.0)


def hotelling_t2(m, t):
    """t L^-1 t' over components with non-negligible eigenvalue."""
    t = _check_scores(m, t)
    keep = _retained(m.eigenvalues)
    return float(np.sum(t[keep] ** 2 / m.eigenvalues[keep]))


def t2_contributions(m, t):
    """Per-variable contribution J-vector t L^(-1/2) P'.

    Loadings orthonormality makes sum_j c_j^2 equal the T2 of ``t``.
    """
    t = _check_scores(m, t)
    keep = _retained(m.eigenvalues)
    scaled = t[keep] / np.sqrt(m.eigenvalues[keep])
    return scaled @ m.loadings[:, keep].T


def relative_t2_contributions(c_i, c_j):
    """Difference of two contribution vectors: what drives sample i away
    from sample j in the PC space."""
    c_i = np.asarray(c_i, dtype=np.float64)
    c_j = np.asarray(c_j, dtype=np.float64)
    if c_i.shape != c_j.shape:
        raise DimensionMismatch("contribution vectors have different lengths")
    return c_i - c_j


def cluster_contributions(m, selection_a, selection_b):
    """Relative contributions between two sample groups, at their centroids.

    Contributions are linear in the scores, so the contribution of a centroid
    equals the centroid of the member contributions; both routes are computed
    and cross-checked.
    """
    ta = _centroid_scores(m, selection_a)
    tb = _centroid_scores(m, selection_b)
    via_centroid = relative_t2_contributions(t2_contributions(m, ta),
                                             t2_contributions(m, tb))

    rows_a = np.mean([t2_contributions(m, m.scores[i]) for i in selection_a], axis=0)
    rows_b = np.mean([t2_contributions(m, m.scores[i]) for i in selection_b], axis=0)
    via_members = rows_a - rows_b
    scale = max(1.0, float(np.max(np.abs(via_centroid))))
    if np.max(np.abs(via_centroid - via_members)) > CENTROID_IDENTITY_TOL * scale:
        raise AssertionError("centroid/member contribution identity violated")
    return via_centroid


def minmax_normalize(v):
    """Map a vector affinely onto [0, 1]; constant input maps to zeros."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise DimensionMismatch("cannot normalize an empty vector")
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def compute_diagnostics(m, d):
    """Bundle Q (total and per-PC), T2 and contributions for all rows of
    dataset ``d`` under model ``m`` (possibly truncated)."""
    x = d.values
    if x.shape[1] != m.n_variables:
        raise DimensionMismatch("dataset and model have different variable counts")
    scores = x @ m.loadings

    resid = x - scores @ m.loadings.T
    q_total = np.maximum(np.sum(resid * resid, axis=1), 0.0)

    a = m.n_components
    q_per_pc = np.empty((x.shape[0], a))
    for k in range(a):
        rk = x - np.outer(scores[:, k], m.loadings[:, k])
        q_per_pc[:, k] = np.maximum(np.sum(rk * rk, axis=1), 0.0)

    keep = _retained(m.eigenvalues)
    inv = np.zeros(a)
    inv[keep] = 1.0 / m.eigenvalues[keep]
    t2 = np.sum(scores ** 2 * inv, axis=1)

    inv_sqrt = np.zeros(a)
    inv_sqrt[keep] = 1.0 / np.sqrt(m.eigenvalues[keep])
    contributions = (scores * inv_sqrt) @ m.loadings.T

    excluded = np.flatnonzero(~keep)
    return DiagnosticsBundle(q_total, q_per_pc, t2, contributions, excluded)


def diagnostics_csv(bundle, variables, samples):
    """CSV export: per-sample Q/T2 plus contribution columns named after
    the variables."""
    out = io.StringIO()
    head = ["sample", "q_total", "t2"]
    head += [f"q_pc{k + 1}" for k in range(bundle.n_components)]
    head += [f"contrib_{v}" for v in variables]
    out.write(",".join(head) + "\n")
    for i, sid in enumerate(samples):
        row = [sid, repr(float(bundle.q_total[i])), repr(float(bundle.t2[i]))]
        row += [repr(float(v)) for v in bundle.q_per_pc[i]]
        row += [repr(float(v)) for v in bundle.contributions[i]]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def _check_scores(m, t):
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (m.n_components,):
        raise DimensionMismatch(
            f"expected a score vector of length {m.n_components}, got shape {t.shape}")
    return t


def _centroid_scores(m, selection):
    idx = list(selection)
    if not idx:
        raise EmptySelection("selection is empty")
    if any(not 0 <= i < m.scores.shape[0] for i in idx):
        raise ComponentOutOfRange("selection index out of range")
    return m.scores[idx].mean(axis=0)
