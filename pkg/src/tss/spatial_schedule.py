"""Per-pixel schedule construction driven by local variance.

A single global schedule treats sky and foliage alike. Here every pixel
gets its own resampling parameters, linearly projected from the local
variance value, so textured regions spend more of their step budget at
the ends of the denoising range than smooth regions do. The result is a
dense H x W x T_prime tensor holding one schedule per spatial location;
iteration k reads one H x W timestep raster out of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tss.schedule_core import (
    DEFAULT_EXP_SLOPE,
    Preset,
    SamplerParams,
    ScheduleKind,
    build_tds_schedule,
    quantize_steps,
)


@dataclass(frozen=True)
class ProjectionBounds:
    """Parameter box that local variance is projected into.

    Variance 0 selects (n_min, a_min), variance 1 selects (n_max, a_max),
    values between interpolate linearly.
    """

    n_min: float
    n_max: float
    a_min: float
    a_max: float

    def __post_init__(self) -> None:
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError("power bounds must satisfy 1 <= n_min <= n_max")
        if not 0 <= self.a_min <= self.a_max <= 1:
            raise ValueError("transition bounds must be ordered fractions in [0, 1]")

    @classmethod
    def from_preset(cls, preset: Preset) -> "ProjectionBounds":
        return cls(preset.n_min, preset.n_max, preset.a_min, preset.a_max)

    def to_dict(self) -> dict:
        return {
            "n_min": self.n_min,
            "n_max": self.n_max,
            "a_min": self.a_min,
            "a_max": self.a_max,
        }


@dataclass(frozen=True)
class SpatialScheduleMap:
    """One schedule per pixel: ``data[i, j]`` is that pixel's step list.

    ``data`` is kept in double precision so per-pixel slices agree exactly
    with independently built global schedules; serialization downcasts to
    single precision.
    """

    data: np.ndarray
    total_train_steps: int
    bounds: ProjectionBounds
    kind: ScheduleKind

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError(f"expected an (H, W, T_prime) tensor, got shape {arr.shape}")
        T = self.total_train_steps
        if np.any(arr < 0) or np.any(arr > T):
            raise ValueError(f"per-pixel timesteps must lie in [0, {T}]")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "kind", ScheduleKind(self.kind))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def steps_per_pixel(self) -> int:
        return self.data.shape[2]


def project_params(v: float, bounds: ProjectionBounds) -> tuple[float, float]:
    """Map a variance value in [0, 1] to concrete (power, transition) params."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"variance value must lie in [0, 1], got {v}")
    n = v * (bounds.n_max - bounds.n_min) + bounds.n_min
    a_frac = v * (bounds.a_max - bounds.a_min) + bounds.a_min
    return float(n), float(a_frac)


def build_spatial_schedule(
    vmap: np.ndarray,
    bounds: ProjectionBounds,
    T: int,
    T_prime: int,
    kind: ScheduleKind = ScheduleKind.POLYNOMIAL,
    exp_slope: float = DEFAULT_EXP_SLOPE,
) -> SpatialScheduleMap:
    """Materialize the per-pixel schedules for a variance map.

    Every pixel's slice equals the global schedule built from that
    pixel's projected (n, a_frac); pixels sharing a variance value share
    one schedule computation, so equal bounds reproduce the global
    schedule at every pixel exactly.
    """
    v = np.asarray(vmap, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError("variance map must be 2-D")
    if v.size == 0:
        raise ValueError("empty variance map")
    if np.any(v < 0.0) or np.any(v > 1.0):
        raise ValueError("variance map values must lie in [0, 1]")
    kind = ScheduleKind(kind)

    # Same linear projection as project_params, vectorized over pixels.
    n_all = v * (bounds.n_max - bounds.n_min) + bounds.n_min
    a_all = v * (bounds.a_max - bounds.a_min) + bounds.a_min
    pairs = np.stack([n_all.ravel(), a_all.ravel()], axis=1)
    uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)

    table = np.empty((uniq.shape[0], T_prime), dtype=np.float64)
    for row, (n, a_frac) in enumerate(uniq):
        params = SamplerParams(T, T_prime, float(n), float(a_frac), kind, exp_slope)
        table[row] = build_tds_schedule(params).steps

    data = table[inverse.ravel()].reshape(v.shape[0], v.shape[1], T_prime)
    return SpatialScheduleMap(data, T, bounds, kind)


def spatial_timestep_at(smap: SpatialScheduleMap, k: int) -> np.ndarray:
    """The H x W timestep raster used at iteration ``k`` (1-based)."""
    if not 1 <= k <= smap.steps_per_pixel:
        raise IndexError(
            f"iteration index {k} outside [1, {smap.steps_per_pixel}]"
        )
    return smap.data[:, :, k - 1].copy()


def quantize_map(smap: SpatialScheduleMap) -> np.ndarray:
    """Integer (H, W, T_prime) tensor, rounded like global schedules."""
    return quantize_steps(smap.data)


def resize_variance_to_grid(vmap: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinearly resample a variance map to the host's feature-grid size.

    Endpoint aligned: output corners sample input corners, so identity
    dimensions return a bit-identical copy and ramps keep their endpoint
    values. Results are re-clamped to [0, 1].
    """
    if width < 1 or height < 1:
        raise ValueError("target dimensions must be positive")
    src = np.asarray(vmap, dtype=np.float64)
    if src.ndim != 2:
        raise ValueError("variance map must be 2-D")
    H, W = src.shape
    if (height, width) == (H, W):
        return src.copy()

    rows = _axis_coords(H, height)
    cols = _axis_coords(W, width)
    r0 = np.floor(rows).astype(np.int64)
    c0 = np.floor(cols).astype(np.int64)
    r1 = np.minimum(r0 + 1, H - 1)
    c1 = np.minimum(c0 + 1, W - 1)
    fr = (rows - r0)[:, None]
    fc = (cols - c0)[None, :]

    top = src[np.ix_(r0, c0)] * (1.0 - fc) + src[np.ix_(r0, c1)] * fc
    bot = src[np.ix_(r1, c0)] * (1.0 - fc) + src[np.ix_(r1, c1)] * fc
    out = top * (1.0 - fr) + bot * fr
    np.clip(out, 0.0, 1.0, out=out)
    return out


def _axis_coords(n_src: int, n_dst: int) -> np.ndarray:
    # endpoint-aligned source coordinates; a single sample takes the center
    if n_dst == 1:
        return np.full(1, (n_src - 1) / 2.0)
    return np.arange(n_dst, dtype=np.float64) * ((n_src - 1) / (n_dst - 1))
