"""HTTP JSON API over a loaded index.

Every endpoint is a pure function of (index, request body): repeating a
request returns a byte-identical body. The index reference is swapped
atomically; requests already running keep the snapshot they started with.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .core import MetricKind, SearchError
from .index import UnifiedIndex
from .search import (RangeQuery, exemplar_search, nn_point_search,
                     range_dataset_search, range_point_search)

__all__ = ["create_app", "set_index", "DEFAULT_MAX_BODY"]

DEFAULT_MAX_BODY = 8_000_000  # bytes; requests above this are refused


class _Holder:
    __slots__ = ("index",)

    def __init__(self, index: UnifiedIndex | None):
        self.index = index


class RangeBody(BaseModel):
    lo: list[float] = Field(min_length=2)
    hi: list[float] = Field(min_length=2)


class ExemplarBody(BaseModel):
    points: list[list[float]] = Field(min_length=1)
    metric: str
    k: int = 10
    epsilon: float | None = None


class PointsBody(BaseModel):
    points: list[list[float]] = Field(min_length=1)


def _f12(x) -> float:
    """Scores travel as decimals with 12 significant digits."""
    return float(f"{float(x):.12g}")


def _err(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": detail})


def _points_array(rows: list[list[float]]) -> np.ndarray:
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise SearchError("points must be rows of at least two coordinates")
    if not np.isfinite(arr).all():
        raise SearchError("points must be finite numbers")
    return arr


def create_app(index: UnifiedIndex | None = None, *,
               max_body: int = DEFAULT_MAX_BODY,
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="sdsearch", docs_url=None, redoc_url=None)
    app.state.holder = _Holder(index)
    app.state.max_body = int(max_body)

    @app.exception_handler(RequestValidationError)
    async def _invalid(_req: Request, exc: RequestValidationError):
        return _err(400, f"invalid request: {exc.errors()[:3]!r}")

    @app.exception_handler(SearchError)
    async def _search_err(_req: Request, exc: SearchError):
        return _err(400, str(exc))

    @app.exception_handler(ValueError)
    async def _value_err(_req: Request, exc: ValueError):
        return _err(400, str(exc))

    @app.middleware("http")
    async def _cap_payload(request: Request, call_next):
        cl = request.headers.get("content-length")
        if cl is not None:
            try:
                n = int(cl)
            except ValueError:
                return _err(400, "bad Content-Length")
            if n > request.app.state.max_body:
                return _err(413, f"payload exceeds {request.app.state.max_body} bytes")
        return await call_next(request)

    def _index() -> UnifiedIndex | None:
        return app.state.holder.index

    @app.get("/datasets")
    def list_datasets():
        idx = _index()
        if idx is None:
            return _err(503, "no index loaded")
        out = []
        for t in idx.datasets:
            out.append({
                "id": t.dataset_id,
                "name": t.name,
                "point_count": t.size,
                "mbr": {"lo": [float(v) for v in t.lo[0]],
                        "hi": [float(v) for v in t.hi[0]]},
            })
        return out

    @app.post("/search/datasets/range")
    def search_range(body: RangeBody):
        idx = _index()
        if idx is None:
            return _err(503, "no index loaded")
        lo = body.lo[:2]
        hi = body.hi[:2]
        if lo[0] > hi[0] or lo[1] > hi[1]:
            return _err(400, "inverted box: lo must not exceed hi")
        ids = range_dataset_search(idx, RangeQuery(lo, hi))
        return {"ids": [int(i) for i in ids]}

    @app.post("/search/datasets/exemplar")
    def search_exemplar(body: ExemplarBody):
        idx = _index()
        if idx is None:
            return _err(503, "no index loaded")
        try:
            metric = MetricKind(body.metric)
        except ValueError:
            return _err(400, f"unknown metric {body.metric!r}")
        if body.k < 1:
            return _err(400, "k must be at least 1")
        q = _points_array(body.points)
        hits = exemplar_search(idx, q, metric, body.k, epsilon=body.epsilon)
        return {"hits": [
            {"id": h.dataset_id, "score": _f12(h.score), "rank": h.rank}
            for h in hits
        ]}

    @app.post("/datasets/{dataset_id}/points/range")
    def points_range(dataset_id: int, body: RangeBody):
        idx = _index()
        if idx is None:
            return _err(503, "no index loaded")
        if dataset_id not in idx._by_id:
            return _err(404, f"no dataset {dataset_id}")
        lo = body.lo[:2]
        hi = body.hi[:2]
        if lo[0] > hi[0] or lo[1] > hi[1]:
            return _err(400, "inverted box: lo must not exceed hi")
        pts = range_point_search(idx, dataset_id, RangeQuery(lo, hi))
        return {"points": [[float(v) for v in row] for row in pts]}

    @app.post("/datasets/{dataset_id}/points/nn")
    def points_nn(dataset_id: int, body: PointsBody):
        idx = _index()
        if idx is None:
            return _err(503, "no index loaded")
        if dataset_id not in idx._by_id:
            return _err(404, f"no dataset {dataset_id}")
        q = _points_array(body.points)
        res = nn_point_search(idx, q, dataset_id)
        pairs = []
        for qp, np_, dist in res:
            pairs.append({
                "query": [float(v) for v in qp],
                "nn": [float(v) for v in np_],
                "dist": _f12(dist),
            })
        return {"pairs": pairs}

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def set_index(app: FastAPI, index: UnifiedIndex) -> None:
    """Swap the served index; in-flight requests keep the old one."""
    app.state.holder = _Holder(index)
