import numpy as np
import pytest

from jeep.fisher import fisher_base
from jeep.jpeg import DCT_MATRIX, quality_to_quant_table
from jeep.variance import (
    SMOOTHING_KERNEL,
    VARIANCE_FLOOR,
    constant_variance,
    estimate_variance_mipod,
    smooth_variance_dct,
)


@pytest.mark.parametrize("var", [4.0, 25.0, 100.0])
def test_white_noise_calibration(var):
    # independent seed from the one used to measure the estimator's gain
    noise = 128 + np.sqrt(var) * np.random.default_rng(99).standard_normal((256, 256))
    est = estimate_variance_mipod(noise)[9:-9, 9:-9]
    within = np.mean((est >= var / 2) & (est <= 2 * var))
    assert within >= 0.9


def test_constant_image_hits_floor():
    est = estimate_variance_mipod(np.full((32, 32), 77.0))
    assert np.all(est == VARIANCE_FLOOR)


def test_estimates_positive(image64):
    assert np.all(estimate_variance_mipod(image64) > 0)


def test_constant_variance():
    assert np.all(constant_variance((16, 8), 1.0) == 1.0)
    for bad in (0.0, -1.0, np.nan):
        with pytest.raises(ValueError):
            constant_variance((8, 8), bad)


def test_const_variance_fisher_per_mode():
    # oracle: I_kl = sum_ij f^4 for sigma^2 = 1, q = 1, computed mode by mode
    info, iota = fisher_base(quality_to_quant_table(100), constant_variance((8, 8), 1.0))
    expect = np.array([np.sum(DCT_MATRIX[8 * k + l] ** 4) for k in range(8) for l in range(8)]).reshape(8, 8)
    assert np.allclose(info, expect, rtol=1e-13)
    assert info[0, 0] == pytest.approx(1 / 64, rel=1e-13)
    assert np.allclose(iota, 2.0)


def test_smoothing_kernel_and_constants():
    assert SMOOTHING_KERNEL.sum() == pytest.approx(1.0)
    v = np.full((32, 32), 6.0)
    assert np.allclose(smooth_variance_dct(v), 6.0)


def test_single_block_smoothing_is_identity(rng):
    v = rng.uniform(1, 50, (8, 8))
    # one block: every neighbour is the block itself, so the per-mode values are kept;
    # the pixel field changes only through the diagonal truncation of the two transforms
    from jeep.jpeg import variance_to_dct, variance_to_spatial

    assert np.allclose(smooth_variance_dct(v), variance_to_spatial(variance_to_dct(v)))


def test_smoothing_mixes_neighbours():
    v = np.ones((24, 24))
    v[8:16, 8:16] = 100.0
    out = smooth_variance_dct(v)
    # the high-variance centre block is pulled down by its low-variance neighbours
    assert out[12, 12] < 100.0 and out[12, 12] > 1.0
