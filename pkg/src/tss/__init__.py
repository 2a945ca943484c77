"""Timestep scheduling and trajectory analysis toolkit for diffusion samplers.

Provides non-uniform timestep schedules concentrated in the early and
late denoising stages, variance-adaptive per-pixel schedules, spatial
timestep-embedding maps, a frequency-band SNR analyzer, and a small
deterministic diffusion harness to exercise all of it end to end.
"""

__version__ = "0.1.0"

from tss.schedule_core import (
    Preset,
    SamplerParams,
    Schedule,
    ScheduleKind,
    build_tds_schedule,
    load_preset,
    quantize_steps,
    resample_exponential,
    resample_polynomial,
    resample_trigonometric,
    uniform_schedule,
)

__all__ = [
    "Preset",
    "SamplerParams",
    "Schedule",
    "ScheduleKind",
    "build_tds_schedule",
    "load_preset",
    "quantize_steps",
    "resample_exponential",
    "resample_polynomial",
    "resample_trigonometric",
    "uniform_schedule",
    "__version__",
]
