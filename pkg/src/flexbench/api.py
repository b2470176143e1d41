"""HTTP service exposing the dataset and predictor to the dashboard.

Routes are plain structured documents with field names matching the record
schema, so the browser UI needs no translation layer. The fitted predictor
is cached against the store file's mtime and swapped atomically on reload.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from flexbench import __version__
from flexbench.dataset import DatasetStore, Record, accelerator_key
from flexbench.dataset import query as query_records
from flexbench.errors import ConfigError, FeaturizeError, FitError, QueryError
from flexbench.predictor import DEFAULT_OVERHEAD_FACTOR, PredictionQuery, ThroughputModel
from flexbench.scenario import Scenario

_PLACEHOLDER = """<!doctype html>
<html><head><title>flexbench</title></head>
<body><h1>flexbench API</h1>
<p>The dashboard bundle is not installed. The API lives under <code>/api</code>:
/api/health, /api/records, /api/meta, POST /api/predict.</p>
</body></html>
"""


class PredictBody(BaseModel):
    """What-if request: a prediction query plus per-request cost overrides."""

    params_b: float = Field(gt=0)
    weight_data_type: str
    scenario: str
    min_throughput: float | None = None
    max_ttft: float | None = None
    must_fit_memory: bool = False
    candidates: list[str] | None = None
    costs: dict[str, float] = Field(default_factory=dict)
    memory_gb: dict[str, float] = Field(default_factory=dict)
    overhead_factor: float | None = None


def _parse_scenario(text: str) -> Scenario:
    try:
        return {"offline": Scenario.OFFLINE, "server": Scenario.SERVER}[text.strip().lower()]
    except KeyError:
        raise HTTPException(status_code=400, detail=f"unknown scenario: {text!r}") from None


class _ModelCache:
    """Store-backed predictor state, refit only when the file changes."""

    def __init__(self, store: DatasetStore):
        self._store = store
        self._lock = threading.Lock()
        self._mtime = -1
        self._records: list[Record] = []
        self._model: ThroughputModel | None = None
        self._fit_error: str | None = None

    def refresh(self) -> None:
        mtime = self._store.mtime_ns()
        with self._lock:
            if mtime == self._mtime:
                return
            records = self._store.load()
            try:
                model: ThroughputModel | None = ThroughputModel.fit(records)
                fit_error = None
            except FitError as exc:
                model = None
                fit_error = str(exc)
            self._records = records
            self._model = model
            self._fit_error = fit_error
            self._mtime = mtime

    @property
    def records(self) -> list[Record]:
        self.refresh()
        with self._lock:
            return self._records

    def model(self) -> ThroughputModel:
        self.refresh()
        with self._lock:
            if self._model is None:
                raise HTTPException(status_code=503, detail=f"no usable data: {self._fit_error}")
            return self._model


def create_app(
    store_path: str | Path,
    cost_book: dict[str, float] | None = None,
    memory_book: dict[str, float] | None = None,
    ui_dir: str | Path | None = None,
    overhead_factor: float = DEFAULT_OVERHEAD_FACTOR,
) -> FastAPI:
    app = FastAPI(title="flexbench", version=__version__)
    store = DatasetStore(store_path)
    cache = _ModelCache(store)
    base_costs = dict(cost_book or {})
    base_memory = dict(memory_book or {})

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/api/health")
    async def health() -> dict:
        return {"status": "ok", "version": __version__, "records": len(cache.records)}

    @app.get("/api/records")
    async def records(request: Request) -> dict:
        filters = dict(request.query_params)
        try:
            hits = query_records(cache.records, filters)
        except QueryError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {"records": hits, "count": len(hits)}

    @app.get("/api/meta")
    async def meta() -> dict:
        recs = cache.records
        accelerators = set()
        vendors = set()
        for r in recs:
            name = r.get("system.accelerator.name")
            if name:
                accelerators.add(accelerator_key(r.get("system.accelerator.vendor"), name))
            if r.get("system.accelerator.vendor"):
                vendors.add(str(r["system.accelerator.vendor"]))
        return {
            "accelerators": sorted(accelerators),
            "models": sorted({str(r["model.name"]) for r in recs if r.get("model.name")}),
            "scenarios": sorted({str(r["submission.scenario"]) for r in recs
                                 if r.get("submission.scenario")}),
            "data_types": sorted({str(r["model.weight_data_types"]) for r in recs
                                  if r.get("model.weight_data_types")}),
            "divisions": sorted({str(r["submission.division"]) for r in recs
                                 if r.get("submission.division")}),
            "vendors": sorted(vendors),
        }

    @app.post("/api/predict")
    async def predict(body: PredictBody) -> dict:
        model = cache.model()
        try:
            query = PredictionQuery(
                params_b=body.params_b,
                weight_data_type=body.weight_data_type,
                scenario=_parse_scenario(body.scenario),
                min_throughput=body.min_throughput,
                max_ttft=body.max_ttft,
                must_fit_memory=body.must_fit_memory,
                candidates=tuple(body.candidates) if body.candidates else None,
            )
            ranked = model.rank(
                query,
                costs={**base_costs, **body.costs},
                memory_gb={**base_memory, **body.memory_gb},
                overhead_factor=(
                    body.overhead_factor if body.overhead_factor else overhead_factor
                ),
            )
        except (ConfigError, FeaturizeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {"results": [p.to_dict() for p in ranked]}

    ui_path = Path(ui_dir) if ui_dir else None
    if ui_path and ui_path.is_dir():
        app.mount("/", StaticFiles(directory=ui_path, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        async def index() -> str:
            return _PLACEHOLDER

    return app
