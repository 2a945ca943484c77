import numpy as np
import pytest

import oracles
from tss.variance_map import (
    gaussian_blur,
    gaussian_kernel_1d,
    local_variance,
    minmax_normalize,
    to_grayscale,
    variance_map,
)


def test_grayscale_weights():
    white = np.ones((4, 4, 3))
    np.testing.assert_allclose(to_grayscale(white), np.ones((4, 4)), atol=1e-12)
    red = np.zeros((4, 4, 3))
    red[..., 0] = 1.0
    np.testing.assert_allclose(to_grayscale(red), np.full((4, 4), 0.299), atol=1e-12)


def test_grayscale_matches_oracle():
    rng = np.random.default_rng(0)
    img = rng.uniform(size=(9, 7, 3))
    np.testing.assert_allclose(to_grayscale(img), oracles.grayscale(img), atol=1e-12)


def test_grayscale_passthrough_and_errors():
    gray = np.zeros((5, 5))
    assert to_grayscale(gray).shape == (5, 5)
    with pytest.raises(ValueError):
        to_grayscale(np.zeros((5, 5, 4)))
    with pytest.raises(ValueError):
        to_grayscale(np.zeros(5))


def test_local_variance_constant_is_zero():
    out = local_variance(np.full((40, 40), 0.7), window=33)
    assert out.shape == (40, 40)
    np.testing.assert_array_equal(out, np.zeros((40, 40)))


def test_local_variance_checkerboard_interior():
    # 3x3 window centered on a 1-pixel of a checkerboard sees five ones:
    # population variance 5/9 - (5/9)^2 = 20/81
    img = np.indices((12, 12)).sum(axis=0) % 2
    out = local_variance(img.astype(np.float64), window=3)
    assert out[6, 6] == pytest.approx(20.0 / 81.0, abs=1e-12)
    assert out[5, 6] == pytest.approx(20.0 / 81.0, abs=1e-12)


def test_local_variance_matches_oracle():
    rng = np.random.default_rng(1)
    img = rng.uniform(size=(64, 64))
    for window in [3, 9, 33]:
        got = local_variance(img, window=window)
        ref = oracles.local_variance(img, window)
        np.testing.assert_allclose(got, ref, atol=1e-9)


def test_local_variance_rejects_even_window():
    with pytest.raises(ValueError):
        local_variance(np.zeros((8, 8)), window=4)
    # window=1 is odd and positive: every patch is a single sample
    np.testing.assert_array_equal(
        local_variance(np.arange(16.0).reshape(4, 4), window=1), np.zeros((4, 4))
    )


def test_local_variance_translation_equivariance():
    rng = np.random.default_rng(2)
    img = rng.uniform(size=(80, 80))
    window = 9
    dy, dx = 5, 3
    shifted = np.roll(img, (dy, dx), axis=(0, 1))
    a = local_variance(img, window=window)
    b = local_variance(shifted, window=window)
    # compare away from both the borders and the roll seam
    margin = window // 2 + max(dy, dx)
    inner_a = a[margin:-margin - dy, margin:-margin - dx]
    inner_b = b[margin + dy:-margin, margin + dx:-margin]
    np.testing.assert_allclose(inner_a, inner_b, atol=1e-12)


def test_gaussian_kernel_normalized_and_symmetric():
    k = gaussian_kernel_1d(9, sigma=1.5)
    assert k.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(k, k[::-1], atol=1e-15)
    assert k[4] == k.max()


def test_gaussian_blur_constant_unchanged():
    img = np.full((20, 20), 0.37)
    out = gaussian_blur(img, window=9)
    np.testing.assert_allclose(out, img, atol=1e-12)


def test_gaussian_blur_impulse_reproduces_kernel():
    img = np.zeros((21, 21))
    img[10, 10] = 1.0
    window, sigma = 7, 1.2
    out = gaussian_blur(img, window=window, sigma=sigma)
    k = gaussian_kernel_1d(window, sigma=sigma)
    expected = np.outer(k, k)
    np.testing.assert_allclose(out[7:14, 7:14], expected, atol=1e-12)
    assert np.all(out[:3, :] == 0.0)


def test_gaussian_blur_matches_dense_oracle():
    rng = np.random.default_rng(3)
    img = rng.uniform(size=(48, 48))
    for window, sigma in [(5, 1.0), (9, 1.5), (33, 33 / 6.0)]:
        got = gaussian_blur(img, window=window, sigma=sigma)
        ref = oracles.gaussian_blur(img, window, sigma)
        np.testing.assert_allclose(got, ref, atol=1e-9)


def test_gaussian_blur_preserves_periodic_mean():
    # normalized kernel preserves the per-period mean of a periodic signal;
    # interior pixels see the true convolution
    rng = np.random.default_rng(4)
    pattern = rng.uniform(size=(8, 8))
    img = np.tile(pattern, (6, 6))
    out = gaussian_blur(img, window=9, sigma=1.5)
    block = out[16:24, 16:24]
    assert block.mean() == pytest.approx(pattern.mean(), abs=1e-6)


def test_gaussian_blur_rejects_bad_arguments():
    with pytest.raises(ValueError):
        gaussian_blur(np.zeros((8, 8)), window=6)
    with pytest.raises(ValueError):
        gaussian_blur(np.zeros((8, 8)), window=5, sigma=0.0)


def test_minmax_examples():
    np.testing.assert_allclose(
        minmax_normalize(np.array([2.0, 4.0, 6.0])), [0.0, 0.5, 1.0], atol=1e-12
    )
    np.testing.assert_array_equal(
        minmax_normalize(np.full((3, 3), 5.0)), np.zeros((3, 3))
    )


def test_minmax_range():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(17, 13))
    out = minmax_normalize(x)
    assert out.min() == 0.0
    assert out.max() == 1.0


def test_variance_map_constant_image():
    out = variance_map(np.full((48, 48), 0.5), window=33)
    np.testing.assert_array_equal(out, np.zeros((48, 48)))


def test_variance_map_separates_texture_from_flat():
    rng = np.random.default_rng(6)
    img = np.full((64, 64), 0.5)
    img[:, 32:] = rng.uniform(size=(64, 32))
    out = variance_map(img, window=9)
    assert out[:, 40:].mean() > out[:, :24].mean() + 0.1
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_variance_map_matches_oracle_composition():
    rng = np.random.default_rng(7)
    gray = rng.uniform(size=(64, 64))
    got = variance_map(gray, window=33)
    ref = oracles.variance_pipeline(gray, 33)
    np.testing.assert_allclose(got, ref, atol=1e-9)
    rgb = rng.uniform(size=(48, 48, 3))
    got = variance_map(rgb, window=9)
    ref = oracles.variance_pipeline(rgb, 9)
    np.testing.assert_allclose(got, ref, atol=1e-9)
