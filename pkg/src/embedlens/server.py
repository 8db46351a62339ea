"""HTTP API over analysis sessions.

Fits run asynchronously in worker threads; clients poll
``GET /sessions/{id}/status`` until the session turns ``ready``. Query
endpoints on a fitting session answer 409 instead of blocking. Ready
sessions are persisted to the data directory as session files and restored
lazily after a restart.
"""

import os
import threading
import uuid
from typing import Optional, Union

import numpy as np
from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .dataset import load_csv, preprocess
from .errors import EmbedLensError
from .session import load_session, run_pipeline, save_session
from .umap import UmapConfig

CLIENT_ERROR_CODES = {
    "RaggedRows", "NonNumericCell", "TooFewRows", "TooFewColumns",
    "AlreadyPreprocessed", "DegenerateData", "DimensionMismatch",
    "ComponentOutOfRange", "IndexOutOfRange", "PerplexityInfeasible",
    "FitDiverged", "EmptySelection", "UnknownSelection", "OutsideBbox",
    "InvalidParameter",
}


class ApiError(Exception):
    def __init__(self, status, code, message, detail=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


def _http_status(exc: EmbedLensError):
    return 400 if exc.code in CLIENT_ERROR_CODES else 500


class UmapParams(BaseModel):
    n_neighbors: int = 15
    min_dist: float = 0.1
    spread: float = 1.0
    metric: str = "euclidean"
    n_epochs: int = 200
    learning_rate: float = 1.0
    negative_sample_rate: int = 5
    seed: Optional[int] = None


class SessionRequest(BaseModel):
    dataset_id: str
    umap: UmapParams = UmapParams()
    max_pcs: int


class ComponentsRequest(BaseModel):
    count: int


class SelectionRequest(BaseModel):
    name: str
    indices: Optional[list[int]] = None
    polygon: Optional[list[list[float]]] = None


class CompareRequest(BaseModel):
    a: str
    b: str


class TransformRequest(BaseModel):
    values: list[float]


class SessionEntry:
    """Mutable fit state for one session id."""

    def __init__(self):
        self.state = "fitting"
        self.epoch = 0
        self.total_epochs = 0
        self.loss = None
        self.error = None
        self.session = None
        self.lock = threading.Lock()


def create_app(data_dir=None, max_concurrent_fits=2, default_seed=0,
               ui_dir=None):
    app = FastAPI(title="embedlens", version="0.1.0")
    datasets = {}
    entries = {}
    fit_slots = threading.BoundedSemaphore(max_concurrent_fits)
    registry_lock = threading.Lock()

    if data_dir:
        os.makedirs(data_dir, exist_ok=True)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        body = {"code": exc.code, "message": exc.message}
        if exc.detail is not None:
            body["detail"] = exc.detail
        return JSONResponse(status_code=exc.status, content=body)

    @app.exception_handler(EmbedLensError)
    async def handle_domain_error(request: Request, exc: EmbedLensError):
        body = {"code": exc.code, "message": exc.message}
        if exc.detail is not None:
            body["detail"] = exc.detail
        return JSONResponse(status_code=_http_status(exc), content=body)

    def get_dataset(dataset_id):
        if dataset_id not in datasets:
            raise ApiError(404, "UnknownDataset", f"no dataset {dataset_id!r}")
        return datasets[dataset_id]

    def get_entry(session_id):
        with registry_lock:
            entry = entries.get(session_id)
        if entry is None and data_dir:
            path = os.path.join(data_dir, f"{session_id}.session")
            if os.path.exists(path):
                with open(path, "rb") as f:
                    restored = load_session(f.read())
                entry = SessionEntry()
                entry.state = "ready"
                entry.session = restored
                with registry_lock:
                    entries.setdefault(session_id, entry)
                    entry = entries[session_id]
        if entry is None:
            raise ApiError(404, "UnknownSession", f"no session {session_id!r}")
        return entry

    def get_ready(session_id):
        entry = get_entry(session_id)
        if entry.state == "fitting":
            raise ApiError(409, "NotReady",
                           f"session {session_id!r} is still fitting",
                           detail={"epoch": entry.epoch, "loss": entry.loss})
        if entry.state == "failed":
            raise ApiError(409, "FitFailed",
                           f"session {session_id!r} failed to fit",
                           detail=entry.error)
        return entry

    @app.post("/datasets", status_code=201)
    async def upload_dataset(
        request: Request,
        delimiter: str = Query(","),
        preprocessing: str = Query("center"),
        has_header: bool = Query(True),
        id_column: Optional[str] = Query(None),
    ):
        if preprocessing not in ("center", "autoscale"):
            raise ApiError(400, "InvalidParameter",
                           "preprocessing must be 'center' or 'autoscale'")
        body = await request.body()
        ds = load_csv(body, delimiter=delimiter, has_header=has_header,
                      id_column=id_column)
        ds = preprocess(ds, preprocessing)
        dataset_id = uuid.uuid4().hex[:12]
        datasets[dataset_id] = ds
        return {"dataset_id": dataset_id, **ds.meta()}

    @app.post("/sessions", status_code=202)
    def create_session(req: SessionRequest):
        ds = get_dataset(req.dataset_id)
        params = req.umap.model_dump()
        if params.get("seed") is None:
            params["seed"] = default_seed
        cfg = UmapConfig(**params)
        cfg.validate(ds.n_samples)
        limit = min(ds.n_samples - 1, ds.n_variables)
        if not 1 <= req.max_pcs <= limit:
            raise ApiError(400, "ComponentOutOfRange",
                           f"max_pcs must lie in [1, {limit}]")

        session_id = uuid.uuid4().hex[:12]
        entry = SessionEntry()
        entry.total_epochs = cfg.n_epochs
        with registry_lock:
            entries[session_id] = entry

        def progress(stage, epoch, total, loss):
            entry.epoch = epoch
            entry.total_epochs = total
            entry.loss = loss

        def work():
            with fit_slots:
                try:
                    result = run_pipeline(ds, cfg, req.max_pcs,
                                          session_id=session_id,
                                          on_progress=progress)
                    entry.session = result
                    if data_dir:
                        path = os.path.join(data_dir, f"{session_id}.session")
                        with open(path, "wb") as f:
                            f.write(save_session(result))
                    entry.state = "ready"
                except EmbedLensError as exc:
                    entry.error = {"code": exc.code, "message": exc.message}
                    entry.state = "failed"
                except Exception as exc:  # noqa: BLE001 - reported via status
                    entry.error = {"code": "InternalError", "message": str(exc)}
                    entry.state = "failed"

        threading.Thread(target=work, daemon=True).start()
        return {"session_id": session_id}

    @app.get("/sessions/{session_id}/status")
    def session_status(session_id: str):
        entry = get_entry(session_id)
        body = {"state": entry.state, "epoch": entry.epoch,
                "total_epochs": entry.total_epochs, "loss": entry.loss}
        if entry.error is not None:
            body["error"] = entry.error
        return body

    @app.get("/sessions/{session_id}/pca")
    def session_pca(session_id: str):
        s = get_ready(session_id).session
        return {
            "explained_variance_ratio": s.pca.explained_variance_ratio.tolist(),
            "eigenvalues": s.pca.eigenvalues.tolist(),
            "selected_components": s.selected_components,
            "n_components": s.pca.n_components,
            "loadings": s.pca.loadings.tolist(),
            "variables": s.dataset.variables,
            "samples": s.dataset.samples,
        }

    @app.put("/sessions/{session_id}/components")
    def set_components(session_id: str, req: ComponentsRequest):
        entry = get_ready(session_id)
        with entry.lock:
            bundle = entry.session.set_components(req.count)
            if data_dir:
                path = os.path.join(data_dir, f"{session_id}.session")
                with open(path, "wb") as f:
                    f.write(save_session(entry.session))
        return {
            "selected_components": entry.session.selected_components,
            "q_total_max": float(bundle.q_total.max()),
            "t2_max": float(bundle.t2.max()),
            "excluded_components": list(bundle.excluded_components),
        }

    @app.get("/sessions/{session_id}/voronoi")
    def session_voronoi(session_id: str):
        return get_ready(session_id).session.voronoi.to_json()

    @app.get("/sessions/{session_id}/color")
    def session_color(session_id: str, mode: str,
                      index: Optional[str] = Query(None)):
        s = get_ready(session_id).session
        idx: Union[str, int, None] = index
        if mode in ("pc_score",) and index is None:
            raise ApiError(400, "InvalidParameter", "pc_score requires index")
        if mode == "variable" and index is None:
            raise ApiError(400, "InvalidParameter", "variable requires index")
        values = s.color_by(mode, idx)
        return {"mode": mode, "index": index,
                "values": [float(v) for v in values]}

    @app.post("/sessions/{session_id}/selections", status_code=201)
    def add_selection(session_id: str, req: SelectionRequest):
        entry = get_ready(session_id)
        with entry.lock:
            size = entry.session.add_selection(req.name, indices=req.indices,
                                               polygon=req.polygon)
        return {"name": req.name, "size": size}

    @app.get("/sessions/{session_id}/selections")
    def list_selections(session_id: str):
        s = get_ready(session_id).session
        return {name: list(idx) for name, idx in s.selections.items()}

    @app.post("/sessions/{session_id}/compare")
    def compare(session_id: str, req: CompareRequest):
        s = get_ready(session_id).session
        report = s.compare(req.a, req.b)
        body = report.to_json(s.dataset.variables)
        body["variables"] = s.dataset.variables
        return body

    @app.get("/sessions/{session_id}/histogram")
    def histogram(session_id: str, var: str, selections: str,
                  bins: int = Query(20, ge=1, le=500)):
        s = get_ready(session_id).session
        names = [n for n in selections.split(",") if n]
        edges, counts = s.variable_histogram(var, names, n_bins=bins)
        return {
            "variable": var,
            "edges": edges.tolist(),
            "counts": {name: c.tolist() for name, c in counts.items()},
        }

    @app.post("/sessions/{session_id}/transform")
    def transform(session_id: str, req: TransformRequest):
        s = get_ready(session_id).session
        coords = s.transform(np.asarray(req.values, dtype=np.float64))
        return {"coords": [float(coords[0]), float(coords[1])]}

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    return app


def main():
    """Entry point: environment-configured uvicorn server."""
    import uvicorn

    host = os.environ.get("EMBEDLENS_HOST", "127.0.0.1")
    port = int(os.environ.get("EMBEDLENS_PORT", "8000"))
    data_dir = os.environ.get("EMBEDLENS_DATA_DIR") or None
    max_fits = int(os.environ.get("EMBEDLENS_MAX_FITS", "2"))
    seed = int(os.environ.get("EMBEDLENS_SEED", "0"))
    ui_dir = os.environ.get("EMBEDLENS_UI_DIR") or None
    app = create_app(data_dir=data_dir, max_concurrent_fits=max_fits,
                     default_seed=seed, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
