import json

import numpy as np
import pytest

from embedlens.dataset import preprocess
from embedlens.errors import (
    ComponentOutOfRange,
    CorruptSession,
    EmptySelection,
    IndexOutOfRange,
    UnknownSelection,
    VersionMismatch,
)
from embedlens.session import load_session, run_pipeline, save_session
from embedlens.synth import make_blob_dataset, make_planted_dataset
from embedlens.umap import UmapConfig


@pytest.fixture(scope="module")
def small_session():
    ds, labels = make_blob_dataset(n_per_blob=30, seed=2)
    d = preprocess(ds, "center")
    cfg = UmapConfig(n_neighbors=8, n_epochs=80, seed=13)
    return run_pipeline(d, cfg, max_pcs=6), labels


def test_pipeline_structural(small_session):
    s, _ = small_session
    assert s.pca.explained_variance_ratio.sum() <= 1.0 + 1e-12
    assert s.voronoi.n_sites == s.dataset.n_samples
    assert s.diagnostics.n_samples == s.dataset.n_samples
    assert 1 <= s.selected_components <= s.pca.n_components
    assert s.diagnostics.n_components == s.selected_components


def test_component_change_recomputes_diagnostics_not_embedding(small_session):
    s, _ = small_session
    coords_before = s.umap.coords.copy()
    old_selected = s.selected_components
    new_count = 2 if old_selected != 2 else 3
    s.set_components(new_count)
    assert s.selected_components == new_count
    assert s.diagnostics.n_components == new_count
    assert np.array_equal(s.umap.coords, coords_before)  # exact
    s.set_components(old_selected)
    with pytest.raises(ComponentOutOfRange):
        s.set_components(0)
    with pytest.raises(ComponentOutOfRange):
        s.set_components(s.pca.n_components + 1)


def test_color_by_contracts(small_session):
    s, _ = small_session
    scores = s.color_by("pc_score", 0)
    assert np.array_equal(scores, s.pca.scores[:, 0])

    q = s.color_by("q_residual", "total")
    assert q.min() == 0.0 and q.max() == 1.0

    qk = s.color_by("q_residual", 0)
    assert qk.min() == 0.0 and qk.max() == 1.0

    col = s.color_by("variable", 3)
    assert np.allclose(col, s.dataset.original_values()[:, 3])
    by_name = s.color_by("variable", "var3")
    assert np.array_equal(col, by_name)

    with pytest.raises(IndexOutOfRange):
        s.color_by("pc_score", s.selected_components)
    with pytest.raises(IndexOutOfRange):
        s.color_by("variable", 99)


def test_selections_by_indices_and_polygon(small_session):
    s, labels = small_session
    n = s.add_selection("first", indices=[0, 1, 2, 2])
    assert n == 3
    assert s.selections["first"] == (0, 1, 2)

    # lasso: a rectangle around blob 0's embedded points
    pts = s.umap.coords[labels == 0]
    lo = pts.min(axis=0) - 0.5
    hi = pts.max(axis=0) + 0.5
    poly = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]]
    n = s.add_selection("lasso", polygon=poly)
    assert n >= (labels == 0).sum()
    got = set(s.selections["lasso"])
    assert set(np.flatnonzero(labels == 0)).issubset(got)

    with pytest.raises(IndexOutOfRange):
        s.add_selection("bad", indices=[9999])
    with pytest.raises(EmptySelection):
        far = [[1e6, 1e6], [1e6 + 1, 1e6], [1e6, 1e6 + 1]]
        s.add_selection("empty", polygon=far)


def test_compare_trivials_and_ranking(small_session):
    s, labels = small_session
    s.add_selection("a", indices=list(np.flatnonzero(labels == 0)))
    s.add_selection("b", indices=list(np.flatnonzero(labels == 1)))

    same = s.compare("a", "a")
    assert np.allclose(same.values, 0.0, atol=1e-12)

    ab = s.compare("a", "b")
    ba = s.compare("b", "a")
    assert np.array_equal(ab.values, -ba.values)
    assert sorted(ab.ranking.tolist()) == list(range(s.dataset.n_variables))
    mags = np.abs(ab.values[ab.ranking])
    assert np.all(np.diff(mags) <= 1e-15)

    with pytest.raises(UnknownSelection):
        s.compare("a", "nope")


def test_compare_finds_planted_variable():
    ds, labels = make_planted_dataset(seed=3)
    d = preprocess(ds, "center")
    cfg = UmapConfig(n_neighbors=10, n_epochs=30, seed=1)
    s = run_pipeline(d, cfg, max_pcs=8)
    s.add_selection("a", indices=list(np.flatnonzero(labels == 0)))
    s.add_selection("b", indices=list(np.flatnonzero(labels == 1)))
    report = s.compare("a", "b")
    assert report.ranking[0] == 7


def test_variable_histogram(small_session):
    s, labels = small_session
    s.add_selection("all", indices=list(range(s.dataset.n_samples)))
    edges, counts = s.variable_histogram(0, ["all"], n_bins=12)
    assert len(edges) == 13
    assert counts["all"].sum() == s.dataset.n_samples

    # disjoint selections are additive per bin
    idx0 = list(np.flatnonzero(labels == 0))
    idx12 = list(np.flatnonzero(labels != 0))
    s.add_selection("zero", indices=idx0)
    s.add_selection("rest", indices=idx12)
    _, parts = s.variable_histogram(0, ["zero", "rest", "all"], n_bins=12)
    assert np.array_equal(parts["zero"] + parts["rest"], parts["all"])


def test_histogram_planted_shift_visible_in_means():
    ds, labels = make_planted_dataset(seed=9)
    d = preprocess(ds, "center")
    col = d.original_values()[:, 7]
    a = col[labels == 0]
    b = col[labels == 1]
    shift = 0.3 * 10.0
    se = np.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
    assert abs((b.mean() - a.mean()) - shift) <= 2.0 * se


def test_save_load_round_trip(small_session):
    s, labels = small_session
    s.add_selection("rt-a", indices=list(np.flatnonzero(labels == 0)))
    s.add_selection("rt-b", indices=list(np.flatnonzero(labels == 2)))
    blob = save_session(s)
    back = load_session(blob)
    assert back.id == s.id
    assert np.array_equal(back.umap.coords, s.umap.coords)
    assert np.array_equal(back.pca.loadings, s.pca.loadings)
    assert (back.umap.graph != s.umap.graph).nnz == 0
    assert np.array_equal(back.dataset.values, s.dataset.values)
    assert back.selections == s.selections
    assert save_session(back) == blob  # byte-stable

    # queries after reload reproduce pre-save results exactly
    r1 = s.compare("rt-a", "rt-b")
    r2 = back.compare("rt-a", "rt-b")
    assert np.array_equal(r1.values, r2.values)
    assert np.array_equal(r1.ranking, r2.ranking)


def test_truncated_stream_is_corrupt(small_session):
    s, _ = small_session
    blob = save_session(s)
    with pytest.raises(CorruptSession):
        load_session(blob[: len(blob) // 2])


def test_checksum_mismatch_detected(small_session):
    s, _ = small_session
    doc = json.loads(save_session(s))
    doc["payload"]["selected_components"] = doc["payload"]["selected_components"] + 0
    doc["crc32"] = (doc["crc32"] + 1) % (2 ** 32)
    with pytest.raises(CorruptSession):
        load_session(json.dumps(doc).encode())


def test_version_mismatch(small_session):
    s, _ = small_session
    doc = json.loads(save_session(s))
    doc["version"] = 99
    with pytest.raises(VersionMismatch):
        load_session(json.dumps(doc).encode())


def test_pipeline_deterministic():
    ds, _ = make_blob_dataset(n_per_blob=20, seed=4)
    d = preprocess(ds, "center")
    cfg = UmapConfig(n_neighbors=6, n_epochs=50, seed=3)
    s1 = run_pipeline(d, cfg, max_pcs=5)
    s2 = run_pipeline(d, cfg, max_pcs=5)
    assert s1.id == s2.id
    assert save_session(s1) == save_session(s2)


def test_csv_export_helpers(small_session):
    from embedlens.session import histogram_csv, values_csv

    s, _ = small_session
    q = s.color_by("q_residual", "total")
    text = values_csv(s.dataset.samples, q, header="q_total")
    lines = text.strip().split("\n")
    assert lines[0] == "sample,q_total"
    assert len(lines) == s.dataset.n_samples + 1

    s.add_selection("csv-a", indices=[0, 1, 2])
    edges, counts = s.variable_histogram(0, ["csv-a"], n_bins=5)
    hist_text = histogram_csv(edges, counts)
    hist_lines = hist_text.strip().split("\n")
    assert hist_lines[0] == "bin_left,bin_right,csv-a"
    assert len(hist_lines) == 6


def test_progress_callback_reports_epochs():
    ds, _ = make_blob_dataset(n_per_blob=15, seed=6)
    d = preprocess(ds, "center")
    cfg = UmapConfig(n_neighbors=5, n_epochs=40, seed=0)
    events = []
    run_pipeline(d, cfg, max_pcs=4,
                 on_progress=lambda stage, e, total, loss: events.append((stage, e)))
    assert events
    assert all(stage == "embedding" for stage, _ in events)
    assert events[-1][1] == cfg.n_epochs - 1
