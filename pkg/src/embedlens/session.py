"""Analysis session: one dataset with its fitted PCA + embedding artifacts,
named selections, and the coloring/comparison queries the UI asks for.

Sessions serialize to a single JSON document with base-64 float64 arrays and
a trailing CRC-32, so a save/load round-trip restores every fitted artifact
bit for bit without refitting.
"""

import hashlib
import json
import zlib

import numpy as np

from .dataset import Dataset
from .diagnostics import (
    DiagnosticsBundle,
    cluster_contributions,
    compute_diagnostics,
    minmax_normalize,
)
from .errors import (
    ComponentOutOfRange,
    CorruptSession,
    EmptySelection,
    IndexOutOfRange,
    InvalidParameter,
    UnknownSelection,
    VersionMismatch,
)
from .pca import PcaModel, auto_select_components, fit_pca
from .serialize import decode_array, decode_optional, encode_array, encode_optional
from .umap import UmapModel, transform_new, umap_embed
from .voronoi import VoronoiDiagram, compute_voronoi

FORMAT_NAME = "embedlens-session"
FORMAT_VERSION = 1


class ContributionReport:
    """Relative contribution values with variables ranked by |value|."""

    def __init__(self, values, selection_a, selection_b):
        self.values = np.asarray(values, dtype=np.float64)
        self.ranking = np.argsort(-np.abs(self.values), kind="stable")
        self.selection_a = selection_a
        self.selection_b = selection_b

    def to_json(self, variables=None):
        doc = {
            "values": [float(v) for v in self.values],
            "ranking": [int(i) for i in self.ranking],
            "selection_a": self.selection_a,
            "selection_b": self.selection_b,
        }
        if variables is not None:
            doc["ranked_variables"] = [variables[i] for i in self.ranking]
        return doc

    def to_csv(self, variables):
        lines = ["variable,contribution"]
        lines += [f"{variables[i]},{repr(float(self.values[i]))}" for i in self.ranking]
        return "\n".join(lines) + "\n"


class AnalysisSession:
    """Single-writer container for the fitted artifacts of one dataset."""

    def __init__(self, session_id, dataset, pca, selected_components, umap,
                 diagnostics, voronoi, selections=None):
        self.id = session_id
        self.dataset = dataset
        self.pca = pca
        self.selected_components = selected_components
        self.umap = umap
        self.diagnostics = diagnostics
        self.voronoi = voronoi
        self.selections = dict(selections or {})
        self._check_consistency()

    def _check_consistency(self):
        i = self.dataset.n_samples
        if not (self.diagnostics.n_samples == i == self.umap.coords.shape[0]
                == self.voronoi.n_sites):
            raise InvalidParameter("artifact row counts disagree")
        if not 1 <= self.selected_components <= self.pca.n_components:
            raise ComponentOutOfRange("selected_components outside model range")

    # -- mutations (single writer) --------------------------------------

    def set_components(self, count):
        """Change the working component count; diagnostics are recomputed,
        the embedding is untouched."""
        if not 1 <= count <= self.pca.n_components:
            raise ComponentOutOfRange(
                f"count must lie in [1, {self.pca.n_components}]")
        bundle = compute_diagnostics(self.pca.truncated(int(count)), self.dataset)
        self.diagnostics = bundle
        self.selected_components = int(count)
        return bundle

    def add_selection(self, name, indices=None, polygon=None):
        """Store a named sample set, from explicit indices or from a lasso
        polygon tested against the embedding coordinates (even-odd rule)."""
        if not name:
            raise InvalidParameter("selection name must be nonempty")
        if (indices is None) == (polygon is None):
            raise InvalidParameter("provide exactly one of indices or polygon")
        if indices is not None:
            idx = sorted(set(int(i) for i in indices))
            if any(i < 0 or i >= self.dataset.n_samples for i in idx):
                raise IndexOutOfRange("selection index outside dataset")
        else:
            poly = [(float(x), float(y)) for x, y in polygon]
            if len(poly) < 3:
                raise InvalidParameter("polygon needs at least 3 vertices")
            idx = [i for i, pt in enumerate(self.umap.coords)
                   if _point_in_polygon(pt, poly)]
        if not idx:
            raise EmptySelection(f"selection {name!r} matches no samples")
        self.selections[name] = tuple(idx)
        return len(idx)

    # -- queries ----------------------------------------------------------

    def color_by(self, mode, index=None):
        """Display values per sample: raw PC score, min-max normalized Q, or
        a raw variable column."""
        # snapshot once: the bundle always matches the selected count, so
        # bounds and data stay consistent under concurrent component changes
        bundle = self.diagnostics
        if mode == "pc_score":
            k = _as_index(index)
            if not 0 <= k < bundle.n_components:
                raise IndexOutOfRange(
                    f"component {k} not below selected count {bundle.n_components}")
            return np.array(self.pca.scores[:, k])
        if mode == "q_residual":
            if index in (None, "total"):
                return minmax_normalize(bundle.q_total)
            k = _as_index(index)
            if not 0 <= k < bundle.n_components:
                raise IndexOutOfRange(
                    f"component {k} not below selected count {bundle.n_components}")
            return minmax_normalize(bundle.q_per_pc[:, k])
        if mode == "variable":
            j = self._variable_index(index)
            return self.dataset.original_values()[:, j]
        raise InvalidParameter(f"unknown color mode {mode!r}")

    def compare(self, name_a, name_b):
        sel_a = self._selection(name_a)
        sel_b = self._selection(name_b)
        model = self.pca.truncated(self.selected_components)
        values = cluster_contributions(model, sel_a, sel_b)
        return ContributionReport(values, name_a, name_b)

    def variable_histogram(self, variable, selection_names, n_bins=20):
        """Per-selection counts over shared equal-width bins spanning the
        variable's full-dataset range (original units)."""
        if not selection_names:
            raise EmptySelection("no selections given")
        if n_bins < 1:
            raise InvalidParameter("n_bins must be positive")
        j = self._variable_index(variable)
        column = self.dataset.original_values()[:, j]
        lo, hi = float(column.min()), float(column.max())
        if hi <= lo:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, n_bins + 1)
        counts = {}
        for name in selection_names:
            idx = list(self._selection(name))
            counts[name], _ = np.histogram(column[idx], bins=edges)
        return edges, counts

    def transform(self, x_original):
        """Embed one new sample given in original units."""
        x = self.dataset.preprocess_vector(np.asarray(x_original, dtype=np.float64))
        return transform_new(self.umap, x)

    # -- helpers ----------------------------------------------------------

    def _selection(self, name):
        if name not in self.selections:
            raise UnknownSelection(f"no selection named {name!r}")
        sel = self.selections[name]
        if not sel:
            raise EmptySelection(f"selection {name!r} is empty")
        return sel

    def _variable_index(self, v):
        if isinstance(v, str) and v in self.dataset.variables:
            return self.dataset.variables.index(v)
        j = _as_index(v)
        if not 0 <= j < self.dataset.n_variables:
            raise IndexOutOfRange(f"variable {v!r} out of range")
        return j


def run_pipeline(d, umap_cfg, max_pcs, session_id=None, on_progress=None):
    """Fit everything for one dataset: PCA (A = max_pcs), component
    auto-selection, the embedding, diagnostics at the selected count, and the
    Voronoi diagram over the embedded coordinates."""
    pca = fit_pca(d, max_pcs)
    selected = auto_select_components(pca)

    if on_progress is not None:
        def on_epoch(epoch, loss):
            on_progress("embedding", epoch, umap_cfg.n_epochs, loss)
    else:
        on_epoch = None

    umap_model = umap_embed(d.values, umap_cfg, on_epoch=on_epoch)
    diagnostics = compute_diagnostics(pca.truncated(selected), d)
    diagram = compute_voronoi(umap_model.coords, seed=umap_cfg.seed)

    if session_id is None:
        session_id = _derive_id(d, umap_cfg, max_pcs)
    return AnalysisSession(session_id, d, pca, selected, umap_model,
                           diagnostics, diagram)


def save_session(s):
    """Serialize to bytes: canonical JSON payload plus CRC-32 envelope."""
    payload = {
        "id": s.id,
        "dataset": _dataset_doc(s.dataset),
        "pca": s.pca.to_doc(),
        "selected_components": int(s.selected_components),
        "umap": s.umap.to_doc(include_training=False),
        "diagnostics": s.diagnostics.to_doc(),
        "voronoi": s.voronoi.to_doc(),
        "selections": {k: [int(i) for i in v] for k, v in s.selections.items()},
    }
    canonical = _canonical(payload)
    document = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "payload": payload,
        "crc32": zlib.crc32(canonical.encode("utf-8")),
    }
    return _canonical(document).encode("utf-8")


def load_session(data):
    """Rebuild a session from ``save_session`` bytes, verifying the checksum."""
    try:
        document = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptSession(f"unparseable session document: {exc}") from exc
    if not isinstance(document, dict) or document.get("format") != FORMAT_NAME:
        raise CorruptSession("not a session document")
    if document.get("version") != FORMAT_VERSION:
        raise VersionMismatch(
            f"session version {document.get('version')} != {FORMAT_VERSION}")
    payload = document.get("payload")
    if payload is None or "crc32" not in document:
        raise CorruptSession("missing payload or checksum")
    if zlib.crc32(_canonical(payload).encode("utf-8")) != document["crc32"]:
        raise CorruptSession("checksum mismatch")

    ds_doc = payload["dataset"]
    ds = Dataset(ds_doc["samples"], ds_doc["variables"],
                 decode_array(ds_doc["values"]), ds_doc["preprocessing"],
                 means=decode_optional(ds_doc["means"]),
                 stds=decode_optional(ds_doc["stds"]),
                 zero_variance=ds_doc["zero_variance"])
    pca = PcaModel.from_doc(payload["pca"])
    umap_model = UmapModel.from_doc(payload["umap"], training_data=ds.values)
    diagnostics = DiagnosticsBundle.from_doc(payload["diagnostics"])
    diagram = VoronoiDiagram.from_doc(payload["voronoi"])
    selections = {k: tuple(v) for k, v in payload["selections"].items()}
    return AnalysisSession(payload["id"], ds, pca,
                           payload["selected_components"], umap_model,
                           diagnostics, diagram, selections)


def values_csv(samples, values, header="value"):
    """One labeled value per sample as CSV (color vectors, Q, T2, ...)."""
    lines = [f"sample,{header}"]
    lines += [f"{sid},{repr(float(v))}" for sid, v in zip(samples, values)]
    return "\n".join(lines) + "\n"


def histogram_csv(edges, counts):
    """Shared-bin histogram counts as CSV, one column per selection."""
    names = list(counts)
    lines = ["bin_left,bin_right," + ",".join(names)]
    for i in range(len(edges) - 1):
        row = [repr(float(edges[i])), repr(float(edges[i + 1]))]
        row += [str(int(counts[n][i])) for n in names]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _dataset_doc(d):
    return {
        "samples": d.samples,
        "variables": d.variables,
        "values": encode_array(d.values),
        "preprocessing": d.preprocessing,
        "means": encode_optional(d.means),
        "stds": encode_optional(d.stds),
        "zero_variance": [int(i) for i in d.zero_variance],
    }


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _derive_id(d, umap_cfg, max_pcs):
    h = hashlib.sha256()
    h.update(d.values.tobytes())
    h.update(";".join(d.variables).encode("utf-8"))
    h.update(_canonical({"umap": umap_cfg.__dict__, "max_pcs": max_pcs}).encode())
    return h.hexdigest()[:16]


def _as_index(v):
    try:
        return int(v)
    except (TypeError, ValueError):
        raise IndexOutOfRange(f"not an index: {v!r}") from None


def _point_in_polygon(pt, poly):
    # even-odd rule; boundary membership follows from the crossing counts
    x, y = float(pt[0]), float(pt[1])
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            if x < x_cross:
                inside = not inside
    return inside
