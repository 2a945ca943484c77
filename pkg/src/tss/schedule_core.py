"""Timestep schedule construction for accelerated diffusion sampling.

A diffusion model trained with ``T`` noise levels is usually sampled with
a much smaller budget of ``T_prime`` inference steps placed uniformly in
``[0, T]``. The functions here reshape that uniform grid with a two-stage
resampling curve so that steps concentrate in the early and late stages
of denoising, where structure and fine detail are actually decided, and
thin out in the middle where consecutive states change little.

Three resampling families are provided: a two-stage polynomial with a
tunable power ``n`` and transition point ``a``, a trigonometric variant,
and a logistic (exponential) variant. Named presets carry the tuning
ranges used with common super-resolution backbones.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

DEFAULT_EXP_SLOPE = 0.004


class ScheduleKind(str, enum.Enum):
    """Shape of the timestep resampling curve."""

    UNIFORM = "uniform"
    POLYNOMIAL = "polynomial"
    TRIGONOMETRIC = "trigonometric"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class SamplerParams:
    """Parameters governing schedule construction.

    Attributes:
        total_train_steps: T, the training noise-level count.
        inference_steps: T_prime, the number of sampling steps to place.
        power: n, the polynomial power; 1 reproduces the uniform grid.
        transition_fraction: the transition point between the early and
            late stages, expressed as a fraction of T.
        kind: resampling family.
        exp_slope: k, logistic slope; used only by the exponential kind.
    """

    total_train_steps: int
    inference_steps: int
    power: float = 1.0
    transition_fraction: float = 0.5
    kind: ScheduleKind = ScheduleKind.POLYNOMIAL
    exp_slope: float = DEFAULT_EXP_SLOPE

    def __post_init__(self) -> None:
        T, Tp = self.total_train_steps, self.inference_steps
        if T < 1:
            raise ValueError(f"total_train_steps must be positive, got {T}")
        if Tp < 1 or Tp > T:
            raise ValueError(
                f"inference_steps must satisfy 1 <= T_prime <= T, got {Tp} with T={T}"
            )
        if self.power < 1:
            raise ValueError(f"power must be >= 1, got {self.power}")
        if not 0.0 <= self.transition_fraction <= 1.0:
            raise ValueError(
                f"transition_fraction must lie in [0, 1], got {self.transition_fraction}"
            )
        if self.exp_slope <= 0:
            raise ValueError(f"exp_slope must be positive, got {self.exp_slope}")
        object.__setattr__(self, "kind", ScheduleKind(self.kind))


@dataclass(frozen=True)
class Schedule:
    """An ordered set of inference timesteps in ``[0, T]``.

    ``steps`` holds the real-valued resampled timesteps and
    ``quantized_steps`` their integer rounding onto the training grid.
    Duplicates produced by rounding are kept; consumers that cannot
    tolerate repeats deduplicate on their side.
    """

    steps: np.ndarray
    quantized_steps: np.ndarray
    params: SamplerParams

    def __post_init__(self) -> None:
        steps = np.asarray(self.steps, dtype=np.float64)
        quant = np.asarray(self.quantized_steps, dtype=np.int64)
        T = self.params.total_train_steps
        if steps.ndim != 1 or steps.shape != quant.shape:
            raise ValueError("steps and quantized_steps must be matching 1-D arrays")
        if len(steps) != self.params.inference_steps:
            raise ValueError("schedule length must equal inference_steps")
        if np.any(steps < 0) or np.any(steps > T):
            raise ValueError(f"schedule steps must lie in [0, {T}]")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "quantized_steps", quant)

    def to_dict(self) -> dict:
        """Serializable form with the full parameterization attached."""
        p = self.params
        return {
            "T": p.total_train_steps,
            "T_prime": p.inference_steps,
            "kind": p.kind.value,
            "n": p.power,
            "a_frac": p.transition_fraction,
            "steps_real": [float(s) for s in self.steps],
            "steps_int": [int(s) for s in self.quantized_steps],
        }


@dataclass(frozen=True)
class Preset:
    """Tuning ranges for a named restoration backbone."""

    name: str
    n_min: float
    n_max: float
    a_min: float
    a_max: float

    def __post_init__(self) -> None:
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError("preset power bounds must satisfy 1 <= n_min <= n_max")
        if not 0 <= self.a_min <= self.a_max <= 1:
            raise ValueError("preset transition bounds must be ordered fractions in [0, 1]")

    def midpoint(self) -> tuple[float, float]:
        """Center of the tuning box, used when one global setting is needed."""
        return (self.n_min + self.n_max) / 2.0, (self.a_min + self.a_max) / 2.0


_PRESETS = {
    "stablesr": Preset("stablesr", 1.0, 1.2, 0.45, 0.65),
    "pasd": Preset("pasd", 1.0, 2.0, 0.4, 0.6),
    "supir": Preset("supir", 2.2, 2.5, 0.58, 0.63),
}


def load_preset(name: str) -> Preset:
    """Return the tuning ranges registered under ``name``.

    Raises:
        KeyError: if the preset name is unknown.
    """
    key = name.lower()
    if key not in _PRESETS:
        known = ", ".join(sorted(_PRESETS))
        raise KeyError(f"unknown preset {name!r}; expected one of: {known}")
    return _PRESETS[key]


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def quantize_steps(steps: np.ndarray) -> np.ndarray:
    """Round real timesteps to the integer grid, halves rounding up."""
    return np.floor(np.asarray(steps, dtype=np.float64) + 0.5).astype(np.int64)


def uniform_schedule(T: int, T_prime: int) -> Schedule:
    """Place ``T_prime`` steps uniformly: floor(k * T / T_prime), k = 1..T_prime.

    The first step is floor(T / T_prime), the last is exactly ``T``;
    timestep 0 is never emitted.
    """
    params = SamplerParams(T, T_prime, power=1.0, kind=ScheduleKind.UNIFORM)
    ks = np.arange(1, T_prime + 1, dtype=np.int64)
    quant = (ks * T) // T_prime
    return Schedule(quant.astype(np.float64), quant, params)


def _as_float_array(t) -> tuple[np.ndarray, bool]:
    scalar = np.ndim(t) == 0
    arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    return arr, scalar


def _check_time_domain(arr: np.ndarray, T: int) -> None:
    if np.any(arr < 0) or np.any(arr > T):
        raise ValueError(f"timestep outside [0, {T}]")


def resample_polynomial(t, a: float, n: float, T: int):
    """Two-stage polynomial resampling of timestep ``t``.

    Below the transition point ``a`` the curve is ``t**n / a**(n-1)``;
    at and above it, ``T - (T-t)**n / (T-a)**(n-1)``. Both branches meet
    at ``f(a) = a`` and pin ``f(0) = 0`` and ``f(T) = T``, so raising
    ``n`` pulls interior steps toward the ends of the range without
    moving the endpoints. Accepts a scalar or an array of timesteps;
    ``a`` is an absolute timestep in ``[0, T]``.

    Degenerate transitions select a single branch: ``a <= 0`` uses the
    late-stage branch everywhere and ``a >= T`` the early-stage branch,
    which is the continuous limit and avoids 0**0 and division by zero.
    """
    if n < 1:
        raise ValueError(f"power must be >= 1, got {n}")
    arr, scalar = _as_float_array(t)
    _check_time_domain(arr, T)
    if a <= 0:
        early = np.zeros(arr.shape, dtype=bool)
    elif a >= T:
        early = np.ones(arr.shape, dtype=bool)
    else:
        early = arr < a
    out = np.empty_like(arr)
    if early.any():
        out[early] = arr[early] ** n / a ** (n - 1)
    late = ~early
    if late.any():
        out[late] = T - (T - arr[late]) ** n / (T - a) ** (n - 1)
    return float(out[0]) if scalar else out


def resample_trigonometric(t, a: float, T: int):
    """Two-stage trigonometric resampling of timestep ``t``.

    Below the transition point: ``-a * cos(pi*t / (2a)) + a``. At and
    above it: ``-a * sin(pi*(t-a) / (2*(T-a))) + T``. The two branches
    do not meet: the early branch approaches ``a`` while the late branch
    starts at ``T``, and the late branch then descends toward ``T - a``.
    The curve is implemented exactly in this printed form, jump and all,
    so schedules built from it are not monotone across the transition.
    """
    arr, scalar = _as_float_array(t)
    _check_time_domain(arr, T)
    if a <= 0:
        early = np.zeros(arr.shape, dtype=bool)
    elif a >= T:
        early = np.ones(arr.shape, dtype=bool)
    else:
        early = arr < a
    out = np.empty_like(arr)
    if early.any():
        out[early] = -a * np.cos(np.pi * arr[early] / (2.0 * a)) + a
    late = ~early
    if late.any():
        out[late] = -a * np.sin(np.pi * (arr[late] - a) / (2.0 * (T - a))) + T
    return float(out[0]) if scalar else out


def resample_exponential(t, k: float, T: int):
    """Logistic resampling: ``T / (1 + exp(-k * (t - T/2)))``.

    Symmetric about the midpoint, where ``f(T/2) = T/2``; the slope ``k``
    controls how sharply steps are pushed toward the two ends. Unlike the
    polynomial curve the endpoints are not pinned: ``f(0)`` and ``f(T)``
    land strictly inside ``(0, T)`` and satisfy ``f(0) + f(T) = T``.
    """
    if k <= 0:
        raise ValueError(f"slope must be positive, got {k}")
    arr, scalar = _as_float_array(t)
    _check_time_domain(arr, T)
    out = T / (1.0 + np.exp(-k * (arr - T / 2.0)))
    return float(out[0]) if scalar else out


def build_tds_schedule(params: SamplerParams) -> Schedule:
    """Build the resampled (time-dynamic) schedule for ``params``.

    Every step of the uniform schedule is mapped through the selected
    resampling function with transition point ``a = transition_fraction * T``.
    ``kind=UNIFORM`` returns the uniform schedule unchanged.
    """
    T = params.total_train_steps
    base = uniform_schedule(T, params.inference_steps).steps
    if params.kind is ScheduleKind.UNIFORM:
        steps = base
    elif params.kind is ScheduleKind.POLYNOMIAL:
        a = params.transition_fraction * T
        steps = resample_polynomial(base, a, params.power, T)
    elif params.kind is ScheduleKind.TRIGONOMETRIC:
        a = params.transition_fraction * T
        steps = resample_trigonometric(base, a, T)
    else:
        steps = resample_exponential(base, params.exp_slope, T)
    return Schedule(steps, quantize_steps(steps), params)


def edge_fraction(steps: np.ndarray, T: int, margin: float = 0.2) -> float:
    """Fraction of steps inside [0, margin*T] or [(1-margin)*T, T]."""
    arr = np.asarray(steps, dtype=np.float64)
    lo = margin * T
    hi = (1.0 - margin) * T
    return float(np.count_nonzero((arr <= lo) | (arr >= hi)) / arr.size)
