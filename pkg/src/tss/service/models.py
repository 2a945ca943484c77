"""Request and response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict


class ScheduleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    T: int = 1000
    T_prime: int
    kind: str = "polynomial"
    preset: str | None = None
    n: float | None = None
    a_frac: float | None = None
    exp_slope: float = 0.004


class ScheduleResponse(BaseModel):
    T: int
    T_prime: int
    kind: str
    n: float
    a_frac: float
    steps_real: list[float]
    steps_int: list[int]


class VarianceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    image: list[list[float]]
    window: int = 33
    sigma: float | None = None


class SpatialScheduleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    image: list[list[float]]
    T: int = 1000
    T_prime: int
    kind: str = "polynomial"
    preset: str | None = None
    n_min: float | None = None
    n_max: float | None = None
    a_min: float | None = None
    a_max: float | None = None
    exp_slope: float = 0.004
    grid_width: int | None = None
    grid_height: int | None = None
    window: int = 33
    sigma: float | None = None


class EmbeddingRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t_raster: list[list[float]]
    channels: int
    max_period: float = 10000.0


class HealthResponse(BaseModel):
    name: str
    version: str
