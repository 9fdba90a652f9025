import numpy as np
import pytest

from jeep.controlled_source import noisify, noisify_with_mean, synthetic_flat_source, wavelet_denoise
from jeep.variance import estimate_variance_mipod


def test_means_range_and_outlier_cap(image512):
    _, var, mean = noisify_with_mean(image512, seed=0)
    assert mean.min() >= 15 and mean.max() <= 240
    assert np.all(np.sqrt(var) <= np.minimum(mean, 255 - mean) / 5 + 1e-12)
    low = mean == mean.min()
    assert np.all(np.sqrt(var[low]) <= mean.min() / 5 + 1e-12)


def test_mean_fifteen_caps_sigma_at_three(monkeypatch):
    import jeep.controlled_source as cs

    # a black image maps to mean 15; a large estimated variance makes the cap bind
    monkeypatch.setattr(cs, "estimate_variance_mipod", lambda image: np.full(np.shape(image), 400.0))
    _, var, mean = cs.noisify_with_mean(np.zeros((64, 64), np.uint8), seed=1)
    assert np.all(mean == 15)
    assert np.allclose(np.sqrt(var), 3.0)


def test_ground_truth_below_estimate(image512):
    _, var = noisify(image512, seed=2)
    assert np.all(var <= estimate_variance_mipod(image512) + 1e-12)


def test_outlier_rate(image512):
    # independent draws from the returned model: mean + sigma z leaves [0, 255] only beyond 5 sigma
    _, var, mean = noisify_with_mean(image512, seed=0)
    rng = np.random.default_rng(77)
    sigma = np.sqrt(var)
    outside = 0
    total = 0
    while total < 10**7:
        x = mean + sigma * rng.standard_normal(mean.shape)
        outside += int(np.count_nonzero((x < 0) | (x > 255)))
        total += x.size
    assert outside / total <= 1e-6


def test_chi_square_consistency(image512):
    out, var, mean = noisify_with_mean(image512, seed=5)
    stat = np.mean((out - mean) ** 2 / var)
    assert stat == pytest.approx(1.0, abs=0.02)


def test_noisify_deterministic(image64):
    a, va = noisify(image64, 3)
    b, vb = noisify(image64, 3)
    assert np.array_equal(a, b) and np.array_equal(va, vb)
    assert not np.array_equal(noisify(image64, 4)[0], a)


def test_denoiser_removes_white_noise():
    rng = np.random.default_rng(0)
    clean = np.full((128, 128), 100.0)
    den = wavelet_denoise(clean + 10 * rng.standard_normal(clean.shape))
    assert np.std(den - clean) < 3.0


def test_flat_source():
    img, var = synthetic_flat_source(512, 512, 25.0, 128.0, seed=0)
    assert np.var(img.astype(float)) == pytest.approx(25.0, abs=1.0)
    assert np.all(var == 25.0)
    img0, _ = synthetic_flat_source(64, 64, 0.0, 100.0, seed=0)
    assert np.all(img0 == 100)
    again, _ = synthetic_flat_source(512, 512, 25.0, 128.0, seed=0)
    assert np.array_equal(img, again)
    with pytest.raises(ValueError):
        synthetic_flat_source(64, 64, 1.0, 5.0, seed=0)
    with pytest.raises(ValueError):
        synthetic_flat_source(64, 64, -1.0, 100.0, seed=0)
