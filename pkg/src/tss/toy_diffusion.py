"""Deterministic toy diffusion harness for exercising schedules.

A real restoration model is replaced by an analytic denoiser that knows
the clean target. With ``blur_strength = 0`` it is exact and every
schedule converges to the target in one step, which pins down the update
algebra. With a positive blur strength the denoiser's target estimate is
low-pass filtered with a radius that grows with the timestep, imitating
a model that recovers coarse structure first and fine detail late; that
makes step placement matter, which is the behavior the schedules exist
to exploit.

Updates are deterministic reverse-process steps: the noise estimate is
removed, the clean estimate re-noised to the destination level. The
spatial variant advances every pixel with its own timestep pair, looking
the noise level up per pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from tss.freq_analysis import BANDS, BandPartition, Trajectory, band_masks
from tss.schedule_core import Schedule, quantize_steps
from tss.spatial_schedule import SpatialScheduleMap, quantize_map


@dataclass(frozen=True)
class NoiseSchedule:
    """Cumulative signal-retention curve of the forward process.

    ``alphas_cumprod[t]`` is the fraction of signal variance surviving at
    noise level ``t``; index 0 is exactly 1 and the curve is strictly
    decreasing.
    """

    total_steps: int
    alphas_cumprod: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.alphas_cumprod, dtype=np.float64)
        if arr.shape != (self.total_steps + 1,):
            raise ValueError("alphas_cumprod must have T + 1 entries")
        if arr[0] != 1.0:
            raise ValueError("alphas_cumprod must start at exactly 1")
        if np.any(arr <= 0.0) or np.any(arr > 1.0):
            raise ValueError("alphas_cumprod values must lie in (0, 1]")
        if np.any(np.diff(arr) >= 0.0):
            raise ValueError("alphas_cumprod must be strictly decreasing")
        object.__setattr__(self, "alphas_cumprod", arr)


def make_noise_schedule(T: int, beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    """Linearly spaced per-step noise rates accumulated into a retention curve."""
    if T < 1:
        raise ValueError("T must be positive")
    if not 0.0 < beta_start < beta_end < 1.0:
        raise ValueError(
            f"betas must satisfy 0 < beta_start < beta_end < 1, got "
            f"({beta_start}, {beta_end})"
        )
    betas = np.linspace(beta_start, beta_end, T)
    abar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    return NoiseSchedule(T, abar)


def forward_noise(x0: np.ndarray, t: int, eps: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    """Noise the clean image to level ``t``: sqrt(abar)*x0 + sqrt(1-abar)*eps."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != x0.shape:
        raise ValueError("eps must match x0 dimensions")
    if not 0 <= t <= schedule.total_steps:
        raise ValueError(f"t outside [0, {schedule.total_steps}]")
    abar = schedule.alphas_cumprod[t]
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def _degraded_target(x0: np.ndarray, t: int, blur_strength: float, T: int) -> np.ndarray:
    # the denoiser's belief about the clean image: exact at t=0, blurrier
    # with growing t when blur_strength > 0
    if blur_strength <= 0.0 or t == 0:
        return x0
    sigma = blur_strength * (t / T)
    return ndimage.gaussian_filter(x0, sigma=sigma, mode="mirror")


def analytic_denoiser(
    x_t: np.ndarray,
    t: int,
    x0_oracle: np.ndarray,
    blur_strength: float = 0.0,
    schedule: NoiseSchedule | None = None,
) -> np.ndarray:
    """Noise estimate backed by a (possibly degraded) view of the target.

    Inverts the forward process around the degraded target: with zero
    blur the returned estimate is the exact noise content of ``x_t``.
    ``t = 0`` is rejected since there is nothing left to denoise.
    """
    if schedule is None:
        raise ValueError("a NoiseSchedule is required")
    x_t = np.asarray(x_t, dtype=np.float64)
    x0_oracle = np.asarray(x0_oracle, dtype=np.float64)
    if x_t.shape != x0_oracle.shape:
        raise ValueError("x_t must match the target's dimensions")
    if not 1 <= t <= schedule.total_steps:
        raise ValueError(f"t must lie in [1, {schedule.total_steps}]")
    abar = schedule.alphas_cumprod[t]
    target = _degraded_target(x0_oracle, t, blur_strength, schedule.total_steps)
    return (x_t - np.sqrt(abar) * target) / np.sqrt(1.0 - abar)


def ddim_step(
    x_t: np.ndarray,
    t_from: int,
    t_to: int,
    eps_hat: np.ndarray,
    schedule: NoiseSchedule,
) -> np.ndarray:
    """One deterministic reverse step from level ``t_from`` to ``t_to``."""
    if not 0 <= t_to < t_from <= schedule.total_steps:
        raise ValueError(
            f"need 0 <= t_to < t_from <= T, got t_from={t_from}, t_to={t_to}"
        )
    x_t = np.asarray(x_t, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    if eps_hat.shape != x_t.shape:
        raise ValueError("eps_hat must match x_t dimensions")
    abar_from = schedule.alphas_cumprod[t_from]
    abar_to = schedule.alphas_cumprod[t_to]
    x0_hat = (x_t - np.sqrt(1.0 - abar_from) * eps_hat) / np.sqrt(abar_from)
    return np.sqrt(abar_to) * x0_hat + np.sqrt(1.0 - abar_to) * eps_hat


def _advance(
    x: np.ndarray,
    t_from: np.ndarray,
    t_to: np.ndarray,
    noise: NoiseSchedule,
    x0: np.ndarray,
    blur_strength: float,
) -> np.ndarray:
    """Lockstep per-pixel reverse step; identity where t_to == t_from."""
    if np.any(t_to > t_from):
        raise ValueError("per-pixel steps must move toward 0")
    out = x.copy()
    active = t_to < t_from
    if not active.any():
        return out
    idx = np.nonzero(active)
    tf = t_from[idx]
    tt = t_to[idx]
    xa = x[idx]

    # one blur per distinct source level, gathered back per pixel
    target = np.empty_like(xa)
    for level in np.unique(tf):
        deg = _degraded_target(x0, int(level), blur_strength, noise.total_steps)
        sel = tf == level
        target[sel] = deg[idx][sel]

    abar_from = noise.alphas_cumprod[tf]
    abar_to = noise.alphas_cumprod[tt]
    eps_hat = (xa - np.sqrt(abar_from) * target) / np.sqrt(1.0 - abar_from)
    x0_hat = (xa - np.sqrt(1.0 - abar_from) * eps_hat) / np.sqrt(abar_from)
    out[idx] = np.sqrt(abar_to) * x0_hat + np.sqrt(1.0 - abar_to) * eps_hat
    return out


def _start_state(x_start: np.ndarray) -> np.ndarray:
    x = np.asarray(x_start, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("state must be a 2-D grayscale raster")
    return x.copy()


def run_sampler(
    x_start: np.ndarray,
    schedule,
    noise: NoiseSchedule,
    x0: np.ndarray,
    blur_strength: float = 0.0,
) -> Trajectory:
    """Run the reverse process along a global schedule.

    ``x_start`` is the state at the schedule's highest step. The schedule
    (a Schedule or an ascending array of timesteps) is walked in reverse
    and a final step to 0 is appended. Every state is recorded with its
    timestep label; steps that quantize to the same level are collapsed
    rather than replayed.
    """
    if isinstance(schedule, Schedule):
        steps = schedule.quantized_steps
    else:
        steps = quantize_steps(np.asarray(schedule, dtype=np.float64))
    if steps.size == 0:
        raise ValueError("schedule is empty")
    if np.any(np.diff(steps) < 0):
        raise ValueError("sampler requires a non-decreasing schedule")
    x = _start_state(x_start)
    shape = x.shape
    levels = [int(s) for s in steps[::-1]]
    if levels[-1] != 0:
        levels.append(0)
    frames = [x]
    labels = [levels[0]]
    for t_from, t_to in zip(levels, levels[1:]):
        if t_to == t_from:
            continue
        x = _advance(
            x,
            np.full(shape, t_from, dtype=np.int64),
            np.full(shape, t_to, dtype=np.int64),
            noise,
            x0,
            blur_strength,
        )
        frames.append(x)
        labels.append(t_to)
    return Trajectory(np.stack(frames), tuple(labels))


def run_sampler_spatial(
    x_start: np.ndarray,
    smap: SpatialScheduleMap,
    noise: NoiseSchedule,
    x0: np.ndarray,
    blur_strength: float = 0.0,
) -> Trajectory:
    """Run the reverse process with one schedule per pixel.

    All pixels advance in lockstep through their own step lists, each
    with its own noise-level lookups; the only cross-pixel coupling is
    the denoiser's spatial blur. Frame labels record the maximum pixel
    level of each state. A per-pixel list that is not non-decreasing
    (possible with the trigonometric curve) is rejected.
    """
    x = _start_state(x_start)
    q = quantize_map(smap)
    if q.shape[:2] != x.shape:
        raise ValueError(
            f"spatial map {q.shape[:2]} does not match state {x.shape}"
        )
    if np.any(np.diff(q, axis=2) < 0):
        raise ValueError("per-pixel schedules must be non-decreasing")
    K = q.shape[2]
    rasters = [q[:, :, k] for k in range(K - 1, -1, -1)]
    rasters.append(np.zeros_like(rasters[0]))
    frames = [x]
    labels = [int(rasters[0].max())]
    for t_from, t_to in zip(rasters, rasters[1:]):
        if np.array_equal(t_from, t_to):
            continue
        x = _advance(x, t_from, t_to, noise, x0, blur_strength)
        frames.append(x)
        labels.append(int(t_to.max()))
    return Trajectory(np.stack(frames), tuple(labels))


def rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(np.asarray(x, dtype=np.float64)))))


def make_toy_target(
    height: int,
    width: int,
    energies: tuple[float, float, float] = (1.0, 1.0, 1.0),
    seed: int = 0,
    partition: BandPartition | None = None,
) -> np.ndarray:
    """Synthesize a unit-RMS target with prescribed band energy ratios.

    White noise is shaped in the frequency domain so the low, medium,
    and high bands carry power proportional to ``energies``; a zero
    entry silences its band entirely.
    """
    if height < 1 or width < 1:
        raise ValueError("target dimensions must be positive")
    if len(energies) != 3 or any(e < 0 for e in energies):
        raise ValueError("energies must be three non-negative weights")
    if sum(energies) == 0:
        raise ValueError("at least one band energy must be positive")
    rng = np.random.default_rng(seed)
    white = rng.standard_normal((height, width))
    spectrum = np.fft.fftshift(np.fft.fft2(white))
    masks = band_masks(width, height, partition)
    shaped = np.zeros_like(spectrum)
    for band, weight in zip(BANDS, energies):
        mask = masks[band]
        power = float(np.sum(np.abs(spectrum[mask]) ** 2))
        if weight > 0.0 and power > 0.0:
            shaped[mask] = spectrum[mask] * np.sqrt(weight / power)
    x = np.fft.ifft2(np.fft.ifftshift(shaped)).real
    scale = rms(x)
    if scale == 0.0:
        raise ValueError("degenerate target: all requested bands are empty")
    return x / scale
