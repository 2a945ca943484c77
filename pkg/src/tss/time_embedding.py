"""Sinusoidal timestep embeddings with unified or per-location injection.

A denoiser conditions on the current timestep through an embedding
vector added to its feature maps. With one global timestep the same
vector is broadcast everywhere; with a per-pixel schedule each location
needs the embedding of its own timestep. Both forms are built from one
shared kernel, so a constant timestep raster reproduces the unified
result bit for bit.
"""

from __future__ import annotations

import numpy as np

DEFAULT_MAX_PERIOD = 10000.0


def _embed(t: np.ndarray, channels: int, max_period: float) -> np.ndarray:
    if channels < 2 or channels % 2 != 0:
        raise ValueError(f"embedding width must be even and >= 2, got {channels}")
    if max_period <= 0:
        raise ValueError("max_period must be positive")
    half = channels // 2
    # geometric frequency ladder: 1 down to ~1/max_period
    freqs = max_period ** (-2.0 * np.arange(half, dtype=np.float64) / channels)
    angles = np.asarray(t, dtype=np.float64)[..., None] * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=-1)


def sinusoidal_embed(t: float, channels: int, max_period: float = DEFAULT_MAX_PERIOD) -> np.ndarray:
    """Embedding vector of a single timestep: sin block then cos block.

    Channel ``i`` of the sin block oscillates at frequency
    ``max_period**(-2i/channels)``; the cos block mirrors it. ``t = 0``
    gives zeros in the sin half and ones in the cos half.
    """
    return _embed(np.float64(t), channels, max_period)


def build_embedding_map(t_raster: np.ndarray, channels: int, max_period: float = DEFAULT_MAX_PERIOD) -> np.ndarray:
    """Per-location embeddings of a timestep raster, shape (H, W, C)."""
    arr = np.asarray(t_raster, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("timestep raster must be 2-D")
    return _embed(arr, channels, max_period)


def inject_unified(z: np.ndarray, t: float, channels: int, max_period: float = DEFAULT_MAX_PERIOD) -> np.ndarray:
    """Add one timestep's embedding at every spatial location of ``z``."""
    feats = _validate_features(z)
    if feats.shape[2] != channels:
        raise ValueError(
            f"feature width {feats.shape[2]} does not match embedding width {channels}"
        )
    return feats + sinusoidal_embed(t, channels, max_period)


def inject_spatial(z: np.ndarray, emap: np.ndarray) -> np.ndarray:
    """Add a per-location embedding map to ``z`` elementwise."""
    feats = _validate_features(z)
    emb = np.asarray(emap, dtype=np.float64)
    if emb.shape != feats.shape:
        raise ValueError(
            f"embedding map shape {emb.shape} does not match features {feats.shape}"
        )
    return feats + emb


def _validate_features(z: np.ndarray) -> np.ndarray:
    feats = np.asarray(z, dtype=np.float64)
    if feats.ndim != 3:
        raise ValueError("features must be channels-last (H, W, C)")
    return feats
