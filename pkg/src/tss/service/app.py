"""HTTP service exposing the core operations.

Array-valued endpoints return NPY v1.0 bytes, exactly the bytes the CLI
would write to disk, so clients can share one parser for both paths.
File-heavy workflows (trajectory analysis, the simulation harness) stay
on the CLI.

Run with: uvicorn tss.service.app:app
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException, Response

from tss import __version__
from tss.files import npy_bytes
from tss.schedule_core import (
    SamplerParams,
    ScheduleKind,
    build_tds_schedule,
    load_preset,
)
from tss.service.models import (
    EmbeddingRequest,
    HealthResponse,
    ScheduleRequest,
    ScheduleResponse,
    SpatialScheduleRequest,
    VarianceRequest,
)
from tss.spatial_schedule import (
    ProjectionBounds,
    build_spatial_schedule,
    resize_variance_to_grid,
)
from tss.time_embedding import build_embedding_map
from tss.variance_map import variance_map


def _npy_response(arr: np.ndarray) -> Response:
    return Response(content=npy_bytes(arr), media_type="application/octet-stream")


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(exc))


def _image_array(rows: list[list[float]]) -> np.ndarray:
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("image must be a non-empty 2-D array of samples in [0, 1]")
    return arr


def create_app() -> FastAPI:
    app = FastAPI(title="tss", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(name="tss", version=__version__)

    @app.post("/schedule", response_model=ScheduleResponse)
    def schedule(req: ScheduleRequest) -> ScheduleResponse:
        n, a = req.n, req.a_frac
        try:
            if req.preset is not None:
                n_mid, a_mid = load_preset(req.preset).midpoint()
                n = n if n is not None else n_mid
                a = a if a is not None else a_mid
            params = SamplerParams(
                req.T,
                req.T_prime,
                n if n is not None else 1.0,
                a if a is not None else 0.5,
                ScheduleKind(req.kind),
                req.exp_slope,
            )
            sched = build_tds_schedule(params)
        except (ValueError, KeyError) as exc:
            raise _bad_request(exc)
        return ScheduleResponse(**sched.to_dict())

    @app.post("/variance-map")
    def variance(req: VarianceRequest) -> Response:
        try:
            vmap = variance_map(_image_array(req.image), req.window, req.sigma)
        except ValueError as exc:
            raise _bad_request(exc)
        return _npy_response(vmap)

    @app.post("/spatial-schedule")
    def spatial(req: SpatialScheduleRequest) -> Response:
        explicit = [req.n_min, req.n_max, req.a_min, req.a_max]
        try:
            if req.preset is not None:
                if any(v is not None for v in explicit):
                    raise ValueError("give either preset or explicit bounds, not both")
                bounds = ProjectionBounds.from_preset(load_preset(req.preset))
            elif all(v is not None for v in explicit):
                bounds = ProjectionBounds(*explicit)
            else:
                raise ValueError("give preset or all of n_min, n_max, a_min, a_max")
            img = _image_array(req.image)
            vmap = variance_map(img, req.window, req.sigma)
            gw = req.grid_width if req.grid_width is not None else vmap.shape[1]
            gh = req.grid_height if req.grid_height is not None else vmap.shape[0]
            grid = resize_variance_to_grid(vmap, gw, gh)
            smap = build_spatial_schedule(
                grid, bounds, req.T, req.T_prime, ScheduleKind(req.kind), req.exp_slope
            )
        except (ValueError, KeyError) as exc:
            raise _bad_request(exc)
        return _npy_response(smap.data)

    @app.post("/embedding")
    def embedding(req: EmbeddingRequest) -> Response:
        arr = np.asarray(req.t_raster, dtype=np.float64)
        try:
            if arr.ndim != 2 or arr.size == 0:
                raise ValueError("t_raster must be a non-empty 2-D array")
            emap = build_embedding_map(arr, req.channels, req.max_period)
        except ValueError as exc:
            raise _bad_request(exc)
        return _npy_response(emap)

    return app


app = create_app()
