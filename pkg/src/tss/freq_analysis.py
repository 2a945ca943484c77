"""Frequency-band residual analysis of denoising trajectories.

Given the frames a sampler produced on its way to a final image, this
module measures how each radial frequency band converges: per-band SNR
of every frame against the final frame, residual noise power, and the
stepwise change of that power (a positive change mid-trajectory means
the sampler transiently added noise in that band). Patch stratification
repeats the measurement separately for smooth, medium, and highly
textured regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tss.variance_map import to_grayscale

BANDS = ("low", "medium", "high")
CLASS_ORDER = ("smooth", "medium", "high")
DEFAULT_PATCH = 128


@dataclass(frozen=True)
class BandPartition:
    """Radial band cut points, as fractions of the Nyquist radius."""

    low_cut: float = 1.0 / 3.0
    high_cut: float = 2.0 / 3.0

    def __post_init__(self) -> None:
        if not 0.0 < self.low_cut < self.high_cut < 1.0:
            raise ValueError(
                f"cuts must satisfy 0 < low_cut < high_cut < 1, got "
                f"({self.low_cut}, {self.high_cut})"
            )


@dataclass(frozen=True)
class Trajectory:
    """Frames of one denoising run, ordered toward the final result.

    ``steps`` holds the timestep label of each frame, non-increasing and
    ending at the least-noisy frame, which serves as the reference.
    """

    frames: np.ndarray
    steps: tuple[int, ...]

    def __post_init__(self) -> None:
        arr = np.asarray(self.frames, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError(f"frames must be a (N, H, W) stack, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError("a trajectory needs at least 2 frames")
        steps = tuple(int(s) for s in self.steps)
        if len(steps) != arr.shape[0]:
            raise ValueError("one timestep label per frame required")
        if any(b > a for a, b in zip(steps, steps[1:])):
            raise ValueError("timestep labels must be non-increasing")
        object.__setattr__(self, "frames", arr)
        object.__setattr__(self, "steps", steps)

    @property
    def reference(self) -> np.ndarray:
        return self.frames[-1]


@dataclass(frozen=True)
class PatchClass:
    """Texture class assigned to one non-overlapping patch."""

    label: str
    row: int
    col: int
    variance: float


def fft2(raster: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2-D DFT; ``np.fft.ifft2`` inverts it."""
    arr = np.asarray(raster, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty raster")
    return np.fft.fft2(arr)


def band_masks(width: int, height: int, partition: BandPartition | None = None) -> dict[str, np.ndarray]:
    """Disjoint covering radial masks over the centered spectrum.

    Returns boolean (height, width) rasters keyed ``low``, ``medium``,
    ``high``. The radius is normalized so 1.0 sits at the Nyquist
    frequency; the DC bin is always in the low band and the spectrum
    corners (radius up to sqrt(2)) land in the high band.
    """
    p = partition if partition is not None else BandPartition()
    fy = np.fft.fftshift(np.fft.fftfreq(height))
    fx = np.fft.fftshift(np.fft.fftfreq(width))
    r = 2.0 * np.hypot(fy[:, None], fx[None, :])
    low = r <= p.low_cut
    high = r > p.high_cut
    medium = ~(low | high)
    return {"low": low, "medium": medium, "high": high}


def band_powers(raster: np.ndarray, masks: dict[str, np.ndarray]) -> dict[str, float]:
    """Spectral power inside each band of ``raster``."""
    spectrum = np.fft.fftshift(fft2(raster))
    power = np.abs(spectrum) ** 2
    if power.shape != masks["low"].shape:
        raise ValueError("mask size does not match raster size")
    return {band: float(power[mask].sum()) for band, mask in masks.items()}


def band_snr(frame: np.ndarray, reference: np.ndarray, masks: dict[str, np.ndarray]) -> dict[str, float]:
    """Per-band SNR in dB of ``frame`` against ``reference``.

    Signal power is the reference's band power, noise power the band
    power of the residual ``reference - frame``. A band with zero
    residual reports ``math.inf``.
    """
    frame = np.asarray(frame, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if frame.shape != reference.shape:
        raise ValueError("frame and reference must share dimensions")
    signal = band_powers(reference, masks)
    noise = band_powers(reference - frame, masks)
    return {band: _snr_db(signal[band], noise[band]) for band in masks}


def _snr_db(signal: float, noise: float) -> float:
    if noise == 0.0:
        return math.inf
    if signal == 0.0:
        return -math.inf
    return 10.0 * math.log10(signal / noise)


def noise_delta_series(traj: Trajectory, masks: dict[str, np.ndarray]) -> dict[str, list[tuple[int, float, float]]]:
    """Residual band power and its stepwise change along a trajectory.

    For every non-final frame: ``noise_power`` is the band power of
    (final - frame) and ``delta_noise`` the next frame's power minus this
    one's. The final frame has zero residual by construction, so the last
    delta is always the negation of the preceding power.
    """
    if traj.frames.shape[0] < 3:
        raise ValueError("need at least 3 frames to form a delta series")
    powers = _residual_powers(traj, masks)
    series: dict[str, list[tuple[int, float, float]]] = {band: [] for band in masks}
    for i in range(traj.frames.shape[0] - 1):
        for band in masks:
            delta = powers[i + 1][band] - powers[i][band]
            series[band].append((traj.steps[i], powers[i][band], delta))
    return series


def _residual_powers(traj: Trajectory, masks: dict[str, np.ndarray]) -> list[dict[str, float]]:
    ref = traj.reference
    return [band_powers(ref - frame, masks) for frame in traj.frames]


def band_report(traj: Trajectory, masks: dict[str, np.ndarray]) -> list[dict]:
    """Flat per-step, per-band rows combining SNR, noise power, and delta.

    The final frame is the reference and is excluded from the rows.
    """
    signal = band_powers(traj.reference, masks)
    powers = _residual_powers(traj, masks)
    rows = []
    for i in range(traj.frames.shape[0] - 1):
        for band in BANDS:
            rows.append(
                {
                    "step": traj.steps[i],
                    "band": band,
                    "snr_db": _snr_db(signal[band], powers[i][band]),
                    "noise_power": powers[i][band],
                    "delta_noise": powers[i + 1][band] - powers[i][band],
                }
            )
    return rows


def classify_patches(img: np.ndarray, patch: int = DEFAULT_PATCH) -> list[PatchClass]:
    """Split an image into a grid of patches and class them by variance.

    Non-overlapping ``patch x patch`` tiles from the top-left corner;
    partial tiles at the right and bottom edges are dropped. Tercile
    thresholds of the observed variances split the classes, with ties
    going to the lower class, so a constant image is entirely smooth.
    """
    if patch < 1:
        raise ValueError("patch size must be positive")
    gray = to_grayscale(img)
    H, W = gray.shape
    if H < patch or W < patch:
        raise ValueError(
            f"image of {H}x{W} is smaller than one {patch}x{patch} patch"
        )
    origins = [
        (r * patch, c * patch)
        for r in range(H // patch)
        for c in range(W // patch)
    ]
    variances = np.array(
        [float(gray[r : r + patch, c : c + patch].var()) for r, c in origins]
    )
    q1, q2 = np.quantile(variances, (1.0 / 3.0, 2.0 / 3.0))
    out = []
    for (r, c), v in zip(origins, variances):
        if v <= q1:
            label = "smooth"
        elif v <= q2:
            label = "medium"
        else:
            label = "high"
        out.append(PatchClass(label, r, c, float(v)))
    return out


def stratified_band_snr(
    traj: Trajectory,
    classes: list[PatchClass],
    masks: dict[str, np.ndarray],
) -> list[dict]:
    """Per-class band SNR rows: band_snr per patch, averaged within class.

    ``masks`` must be built at the patch size. Averaging happens in the
    dB domain and an infinite patch value propagates to its class mean.
    Classes with no patches contribute no rows.
    """
    rows = []
    for entry in stratified_report(traj, classes, masks):
        rows.append(
            {
                "class": entry["class"],
                "step": entry["step"],
                "band": entry["band"],
                "snr_db": entry["snr_db"],
            }
        )
    return rows


def stratified_report(
    traj: Trajectory,
    classes: list[PatchClass],
    masks: dict[str, np.ndarray],
) -> list[dict]:
    """Class-stratified version of :func:`band_report`.

    Noise power is averaged over the class's patches in the power
    domain; deltas difference those averages between consecutive steps.
    """
    patch_h, patch_w = masks["low"].shape
    if patch_h != patch_w:
        raise ValueError("stratified analysis expects square patch masks")
    patch = patch_h
    H, W = traj.frames.shape[1:]
    for pc in classes:
        if pc.row + patch > H or pc.col + patch > W:
            raise ValueError("patch origin falls outside the trajectory frames")

    by_label: dict[str, list[PatchClass]] = {label: [] for label in CLASS_ORDER}
    for pc in classes:
        if pc.label not in by_label:
            raise ValueError(f"unknown patch class label {pc.label!r}")
        by_label[pc.label].append(pc)

    ref = traj.reference
    n_frames = traj.frames.shape[0]
    rows = []
    for label in CLASS_ORDER:
        members = by_label[label]
        if not members:
            continue
        signal = [
            band_powers(ref[pc.row : pc.row + patch, pc.col : pc.col + patch], masks)
            for pc in members
        ]
        residual = []
        for i in range(n_frames):
            diff = ref - traj.frames[i]
            residual.append(
                [
                    band_powers(diff[pc.row : pc.row + patch, pc.col : pc.col + patch], masks)
                    for pc in members
                ]
            )
        for i in range(n_frames - 1):
            for band in BANDS:
                snrs = [
                    _snr_db(sig[band], res[band])
                    for sig, res in zip(signal, residual[i])
                ]
                power_now = float(np.mean([res[band] for res in residual[i]]))
                power_next = float(np.mean([res[band] for res in residual[i + 1]]))
                rows.append(
                    {
                        "class": label,
                        "step": traj.steps[i],
                        "band": band,
                        "snr_db": float(np.mean(snrs)),
                        "noise_power": power_now,
                        "delta_noise": power_next - power_now,
                    }
                )
    return rows
