import numpy as np
import pytest

from embedlens.dataset import preprocess
from embedlens.session import run_pipeline
from embedlens.synth import make_blob_dataset
from embedlens.umap import UmapConfig, umap_embed


@pytest.fixture(scope="session")
def blob_data():
    """300-sample, 10-variable, 3-blob benchmark with 30 held-out rows."""
    ds, labels, held, held_labels = make_blob_dataset(seed=11, held_out_per_blob=10)
    return preprocess(ds, "center"), labels, held, held_labels


@pytest.fixture(scope="session")
def blob_umap(blob_data):
    d, labels, _, _ = blob_data
    cfg = UmapConfig(n_neighbors=15, min_dist=0.1, n_epochs=200, seed=7)
    return umap_embed(d.values, cfg), cfg


@pytest.fixture(scope="session")
def blob_session(blob_data):
    d, labels, _, _ = blob_data
    cfg = UmapConfig(n_neighbors=15, min_dist=0.1, n_epochs=200, seed=7)
    return run_pipeline(d, cfg, max_pcs=8), labels


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
