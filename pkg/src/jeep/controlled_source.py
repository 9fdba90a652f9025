"""Synthetic cover sources with known per-pixel variance."""

from __future__ import annotations

import numpy as np
import pywt
from scipy import ndimage

from .jpeg import check_geometry, check_image, round_half_away
from .variance import estimate_variance_mipod

DENOISE_SIGMA = 10.0
MEAN_RANGE = (15.0, 240.0)
OUTLIER_SIGMAS = 5.0


def wavelet_denoise(image: np.ndarray, sigma: float = DENOISE_SIGMA, levels: int = 3, wavelet: str = "db4") -> np.ndarray:
    """Soft-threshold the detail subbands of an orthogonal wavelet decomposition at ``3 sigma``.

    ``db4`` is the 8-tap Daubechies filter. Periodic extension keeps the
    transform orthogonal so white noise keeps standard deviation ``sigma`` in
    every subband.
    """
    coeffs = pywt.wavedec2(np.asarray(image, dtype=np.float64), wavelet, mode="periodization", level=levels)
    out = [coeffs[0]]
    for detail in coeffs[1:]:
        out.append(tuple(pywt.threshold(band, 3.0 * sigma, mode="soft") for band in detail))
    return pywt.waverec2(out, wavelet, mode="periodization")


def noisify_with_mean(image: np.ndarray, seed: int, sigma_den: float = DENOISE_SIGMA):
    """Replace the noise of ``image`` by independent Gaussian noise of known variance.

    Returns the noisified 8-bit image, the ground-truth variance field and the
    integer means the noise was added to.
    """
    image = check_image(image).astype(np.float64)
    sigma = np.sqrt(estimate_variance_mipod(image))
    denoised = np.clip(wavelet_denoise(image, sigma_den), 0.0, 255.0)
    lo, hi = MEAN_RANGE
    mean = round_half_away(lo + denoised * (hi - lo) / 255.0)
    sigma_true = np.minimum(np.minimum(mean, 255.0 - mean) / OUTLIER_SIGMAS, sigma)
    noise = np.random.default_rng(seed).standard_normal(image.shape)
    out = np.clip(round_half_away(mean + sigma_true * noise), 0, 255).astype(np.uint8)
    return out, sigma_true**2, mean


def noisify(image: np.ndarray, seed: int, sigma_den: float = DENOISE_SIGMA) -> tuple[np.ndarray, np.ndarray]:
    """Noisified image and its ground-truth variance field; see :func:`noisify_with_mean`."""
    out, var, _ = noisify_with_mean(image, seed, sigma_den)
    return out, var


def synthetic_flat_source(width: int, height: int, variance: float, mean: float, seed: int):
    """I.i.d. rounded, clipped Gaussian image with constant variance."""
    if variance < 0 or not np.isfinite(variance):
        raise ValueError("variance must be nonnegative")
    if not MEAN_RANGE[0] <= mean <= MEAN_RANGE[1]:
        raise ValueError(f"mean must lie in {MEAN_RANGE}")
    check_geometry((height, width))
    noise = np.random.default_rng(seed).standard_normal((height, width))
    img = np.clip(round_half_away(mean + np.sqrt(variance) * noise), 0, 255).astype(np.uint8)
    return img, np.full((height, width), float(variance))


def textured_image(width: int = 512, height: int = 512, seed: int = 0, noise: float = 3.0) -> np.ndarray:
    """Deterministic natural-looking test precover: smooth shading, edges, texture and sensor noise."""
    check_geometry((height, width))
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width] / max(height, width)
    base = 124 + 45 * np.sin(3.1 * xx + 1.3) * np.cos(2.3 * yy - 0.4)
    blobs = ndimage.gaussian_filter(rng.standard_normal((height, width)), 12) * 500
    texture = ndimage.gaussian_filter(rng.standard_normal((height, width)), 1.2) * 40
    region = ndimage.gaussian_filter(rng.standard_normal((height, width)), 24) > 0
    edges = np.where(region, 25.0, -25.0)
    weight = 0.3 + 0.7 * (xx > 0.45)
    img = base + blobs + edges + weight * texture + noise * rng.standard_normal((height, width))
    return np.clip(round_half_away(img), 0, 255).astype(np.uint8)
