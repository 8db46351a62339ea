"""Synthetic benchmark generators with known ground truth.

Two constructions recur throughout the test suite and demos:

* well-separated Gaussian blobs where two of the clusters differ in exactly
  one known variable, so contribution rankings have a planted answer, and
* a two-cluster set whose discriminating variable is shifted by only a
  fraction of the dominant variable's spread, i.e. invisible to per-variable
  color maps but recoverable from relative contributions.
"""

import numpy as np

from .dataset import Dataset

BLOB_PLANTED_VARIABLE = 3


def make_blob_dataset(n_per_blob=100, n_variables=10, separation=10.0,
                      within_sd=1.0, seed=0, held_out_per_blob=0):
    """Three Gaussian blobs in ``n_variables`` dimensions.

    Blob centers: blob 0 at the origin; blob 1 shifted along variable
    ``BLOB_PLANTED_VARIABLE`` by ``separation * within_sd``; blob 2 shifted
    diagonally along two other variables by the same total distance. So blobs
    0 and 1 differ only in the planted variable.

    Returns (dataset, labels) and, when ``held_out_per_blob`` > 0, additionally
    (held_out_rows, held_out_labels) in original units.
    """
    if n_variables < 8:
        raise ValueError("need at least 8 variables for the blob layout")
    rng = np.random.default_rng(seed)
    dist = separation * within_sd

    centers = np.zeros((3, n_variables))
    centers[1, BLOB_PLANTED_VARIABLE] = dist
    centers[2, 0] = dist / np.sqrt(2.0)
    centers[2, 7] = dist / np.sqrt(2.0)

    def draw(count):
        rows, labels = [], []
        for blob in range(3):
            rows.append(centers[blob] + rng.normal(0.0, within_sd,
                                                   size=(count, n_variables)))
            labels += [blob] * count
        return np.vstack(rows), np.array(labels)

    values, labels = draw(n_per_blob)
    samples = [f"s{i}" for i in range(values.shape[0])]
    variables = [f"var{j}" for j in range(n_variables)]
    ds = Dataset(samples, variables, values)

    if held_out_per_blob:
        held, held_labels = draw(held_out_per_blob)
        return ds, labels, held, held_labels
    return ds, labels


def make_planted_dataset(n_per_cluster=100, n_variables=12, seed=0,
                         dominant_variable=0, planted_variable=7,
                         dominant_sd=10.0, planted_within_sd=6.0,
                         shift_fraction=0.3):
    """Two clusters whose only systematic difference is a shift in the
    planted variable of ``shift_fraction * dominant_sd``.

    The planted variable's within-cluster spread exceeds the shift, so the
    clusters overlap heavily on that axis (color maps show nothing), while
    the dominant variable carries large variance common to both clusters.

    Returns (dataset, labels).
    """
    rng = np.random.default_rng(seed)
    n = 2 * n_per_cluster
    values = rng.normal(0.0, 1.0, size=(n, n_variables))
    values[:, dominant_variable] = rng.normal(0.0, dominant_sd, size=n)

    shift = shift_fraction * dominant_sd
    planted = rng.normal(0.0, planted_within_sd, size=n)
    planted[:n_per_cluster] -= shift / 2.0
    planted[n_per_cluster:] += shift / 2.0
    values[:, planted_variable] = planted

    labels = np.array([0] * n_per_cluster + [1] * n_per_cluster)
    samples = [f"s{i}" for i in range(n)]
    variables = [f"var{j}" for j in range(n_variables)]
    return Dataset(samples, variables, values), labels
