"""Smoothed local-variance maps.

Local grayscale variance is a cheap proxy for texture: flat sky scores
near zero, foliage and hair score high. The map produced here drives the
per-pixel schedule selection, so it is smoothed with a Gaussian of the
same footprint as the variance window and min-max normalized into [0, 1].
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

DEFAULT_WINDOW = 33

# Rec. 601 luma weights.
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def _validate_image(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim not in (2, 3):
        raise ValueError(f"expected a 2-D or 3-D image array, got shape {arr.shape}")
    if arr.ndim == 3 and arr.shape[2] != 3:
        raise ValueError(f"expected 1 or 3 channels, got {arr.shape[2]}")
    if arr.size == 0:
        raise ValueError("empty image")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite samples")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image samples must lie in [0, 1]")
    return arr


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Collapse a 3-channel image to luma; 1-channel input passes through."""
    arr = _validate_image(img)
    if arr.ndim == 2:
        return arr
    return arr @ _LUMA


def local_variance(img: np.ndarray, window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Population variance of the ``window x window`` patch around each pixel.

    Borders are mirror padded (edge sample not repeated), so the output
    has the same shape as the input. ``window`` may exceed the image
    size; padding extends as far as needed.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and positive, got {window}")
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("local_variance expects a grayscale image")
    # E[x^2] - E[x]^2 over the window; 'mirror' matches np.pad reflect.
    # Shift by a reference sample first: variance is shift-invariant, and
    # this makes constant inputs come out exactly zero instead of ~1e-15.
    if arr.size:
        arr = arr - arr.flat[0]
    mean = ndimage.uniform_filter(arr, size=window, mode="mirror")
    mean_sq = ndimage.uniform_filter(arr * arr, size=window, mode="mirror")
    var = mean_sq - mean * mean
    np.maximum(var, 0.0, out=var)  # clip tiny negative round-off
    return var


def gaussian_kernel_1d(window: int, sigma: float) -> np.ndarray:
    """Sampled Gaussian of length ``window``, normalized to sum 1."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and positive, got {window}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.arange(window, dtype=np.float64) - (window - 1) / 2.0
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(raster: np.ndarray, window: int = DEFAULT_WINDOW, sigma: float | None = None) -> np.ndarray:
    """Separable Gaussian blur with kernel size ``window``, mirror padded.

    ``sigma`` defaults to ``window / 6`` so the kernel support reaches
    about three standard deviations.
    """
    if sigma is None:
        sigma = window / 6.0
    k = gaussian_kernel_1d(window, sigma)
    arr = np.asarray(raster, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("gaussian_blur expects a 2-D raster")
    out = ndimage.correlate1d(arr, k, axis=0, mode="mirror")
    return ndimage.correlate1d(out, k, axis=1, mode="mirror")


def minmax_normalize(raster: np.ndarray) -> np.ndarray:
    """Affinely rescale to [0, 1]; a constant raster maps to all zeros."""
    arr = np.asarray(raster, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty raster")
    lo = arr.min()
    hi = arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def variance_map(img: np.ndarray, window: int = DEFAULT_WINDOW, sigma: float | None = None) -> np.ndarray:
    """Normalized, smoothed local-variance raster of an image.

    Composition of :func:`to_grayscale`, :func:`local_variance`,
    :func:`gaussian_blur`, and :func:`minmax_normalize`. The result has
    the image's spatial shape with values in [0, 1]; a constant image
    yields the all-zero map.
    """
    gray = to_grayscale(img)
    return minmax_normalize(gaussian_blur(local_variance(gray, window), window, sigma))
