"""Bilinear PCA model: scores, orthonormal loadings and explained variance.

The fit uses a thin SVD of the preprocessed matrix; the eigendecomposition
of X'X only appears in tests as an independent oracle. Eigenvalues follow
the convention eig_k = s_k^2 (eigenvalues of X'X, no sample-size divisor),
which also sets the scale of the Hotelling statistics downstream.
"""

import io

import numpy as np

from .dataset import AUTOSCALED, CENTERED
from .errors import ComponentOutOfRange, DegenerateData, DimensionMismatch, InvalidParameter
from .serialize import decode_array, decode_optional, encode_array, encode_optional

DEGENERATE_REL_TOL = 1e-12
AUTO_SELECT_TARGET = 0.95


class PcaModel:
    """Fitted PCA artifacts; immutable after construction.

    mean/scale live in original units so new samples can be projected without
    the training dataset. ``scale`` is None for centered-only data.
    """

    def __init__(self, mean, scale, loadings, scores, eigenvalues,
                 explained_variance_ratio):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.scale = None if scale is None else np.asarray(scale, dtype=np.float64)
        self.loadings = np.asarray(loadings, dtype=np.float64)
        self.scores = np.asarray(scores, dtype=np.float64)
        self.eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
        self.explained_variance_ratio = np.asarray(explained_variance_ratio,
                                                   dtype=np.float64)
        for a in (self.mean, self.loadings, self.scores, self.eigenvalues,
                  self.explained_variance_ratio):
            a.flags.writeable = False
        if self.scale is not None:
            self.scale.flags.writeable = False

    @property
    def n_components(self):
        return self.loadings.shape[1]

    @property
    def n_variables(self):
        return self.loadings.shape[0]

    def truncated(self, a):
        """View of this model restricted to the first ``a`` components."""
        if not 1 <= a <= self.n_components:
            raise ComponentOutOfRange(f"component count {a} not in [1, {self.n_components}]")
        if a == self.n_components:
            return self
        return PcaModel(self.mean, self.scale, self.loadings[:, :a],
                        self.scores[:, :a], self.eigenvalues[:a],
                        self.explained_variance_ratio[:a])

    def preprocess_vector(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_variables,):
            raise DimensionMismatch(
                f"expected a vector of length {self.n_variables}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidParameter("input vector contains non-finite values")
        centered = x - self.mean
        return centered / self.scale if self.scale is not None else centered

    def to_doc(self):
        return {
            "mean": encode_array(self.mean),
            "scale": encode_optional(self.scale),
            "loadings": encode_array(self.loadings),
            "scores": encode_array(self.scores),
            "eigenvalues": encode_array(self.eigenvalues),
            "explained_variance_ratio": encode_array(self.explained_variance_ratio),
        }

    @classmethod
    def from_doc(cls, doc):
        return cls(decode_array(doc["mean"]), decode_optional(doc["scale"]),
                   decode_array(doc["loadings"]), decode_array(doc["scores"]),
                   decode_array(doc["eigenvalues"]),
                   decode_array(doc["explained_variance_ratio"]))


def fit_pca(d, max_components):
    """Fit PCA on a preprocessed dataset via thin SVD.

    Scores are U*s, loadings V; each loading column is sign-flipped so its
    largest-magnitude entry is positive, making output deterministic.
    Trailing zero eigenvalues are kept; DegenerateData is raised only when
    every eigenvalue is negligible against the data's total scale.
    """
    if d.preprocessing not in (CENTERED, AUTOSCALED):
        raise InvalidParameter("fit_pca requires a centered or autoscaled dataset")
    i, j = d.values.shape
    limit = min(i - 1, j)
    if not 1 <= max_components <= limit:
        raise ComponentOutOfRange(
            f"max_components {max_components} not in [1, {limit}] for a {i}x{j} matrix")

    x = d.values
    u, s, vt = np.linalg.svd(x, full_matrices=False)

    eig = s ** 2
    orig = d.original_values()
    total_scale = max(float(np.sum(orig * orig)), np.finfo(np.float64).tiny)
    if eig.size == 0 or eig[0] < DEGENERATE_REL_TOL * total_scale:
        raise DegenerateData("no component rises above numerical noise "
                             "(e.g. identical rows)")

    a = max_components
    loadings = vt[:a].T.copy()
    scores = (u[:, :a] * s[:a]).copy()
    eig = eig[:a].copy()

    # deterministic sign: largest-|entry| of each loading column made positive
    flip = np.sign(loadings[np.argmax(np.abs(loadings), axis=0), np.arange(a)])
    flip[flip == 0] = 1.0
    loadings *= flip
    scores *= flip

    tss = float(np.sum(x * x))
    ratio = eig / tss

    return PcaModel(d.means, d.stds if d.preprocessing == AUTOSCALED else None,
                    loadings, scores, eig, ratio)


def project(m, x):
    """Score vector of a J-vector given in original units."""
    return m.preprocess_vector(x) @ m.loadings


def reconstruct(m, t):
    """Map an A-vector of scores back to original units."""
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (m.n_components,):
        raise DimensionMismatch(
            f"expected a score vector of length {m.n_components}, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise InvalidParameter("score vector contains non-finite values")
    x = t @ m.loadings.T
    if m.scale is not None:
        x = x * m.scale
    return x + m.mean


def auto_select_components(m):
    """Smallest count whose cumulative explained variance reaches 95%."""
    cum = np.cumsum(m.explained_variance_ratio)
    hit = np.flatnonzero(cum >= AUTO_SELECT_TARGET)
    a = int(hit[0]) + 1 if hit.size else m.n_components
    return min(max(a, 1), m.n_components)


def loadings_csv(m, variables):
    """Loadings as CSV with one row per variable."""
    out = io.StringIO()
    out.write("variable," + ",".join(f"pc{k + 1}" for k in range(m.n_components)) + "\n")
    for name, row in zip(variables, m.loadings):
        out.write(name + "," + ",".join(repr(float(v)) for v in row) + "\n")
    return out.getvalue()
