"""Pixel variance estimation and DCT-domain smoothing of variance fields."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import ndimage

from .jpeg import BLOCK, check_geometry, variance_to_dct, variance_to_spatial

VARIANCE_FLOOR = 0.01
SMOOTHING_FLOOR = 1e-10

# same-mode neighbour weights across adjacent blocks
SMOOTHING_KERNEL = np.array([[1.0, 3.0, 1.0], [3.0, 4.0, 3.0], [1.0, 3.0, 1.0]]) / 20.0


def _wiener_residual(image: np.ndarray, size: int) -> np.ndarray:
    """``image - wiener(image)`` for a local ``size x size`` adaptive Wiener filter."""
    mean = ndimage.uniform_filter(image, size, mode="reflect")
    power = ndimage.uniform_filter(image * image, size, mode="reflect")
    local_var = np.maximum(power - mean * mean, 0.0)
    noise = local_var.mean()
    gain = np.zeros_like(local_var)
    keep = local_var > noise
    gain[keep] = (local_var[keep] - noise) / local_var[keep]
    return (image - mean) * (1.0 - gain)


@lru_cache(maxsize=None)
def trig_fit_kernel(window: int, degree: int) -> np.ndarray:
    """Linear weights that evaluate a least-squares cosine-polynomial fit at the window centre.

    The basis is ``cos(pi p (s + 1/2) / window) * cos(pi r (t + 1/2) / window)``
    for all ``p + r <= degree``.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    s = np.arange(window)
    cos1d = [np.cos(np.pi * p * (s + 0.5) / window) for p in range(degree + 1)]
    columns = [
        np.outer(cos1d[p], cos1d[r]).ravel()
        for p in range(degree + 1)
        for r in range(degree + 1 - p)
    ]
    g = np.stack(columns, axis=1)
    centre = (window // 2) * window + window // 2
    weights = g[centre] @ np.linalg.pinv(g)
    kernel = weights.reshape(window, window)
    kernel.setflags(write=False)
    return kernel


def _raw_estimate(image: np.ndarray, window: int, degree: int, wiener_size: int) -> np.ndarray:
    residual = _wiener_residual(np.asarray(image, dtype=np.float64), wiener_size)
    kernel = trig_fit_kernel(window, degree)
    return ndimage.correlate(residual * residual, kernel, mode="mirror")


@lru_cache(maxsize=None)
def white_noise_gain(window: int, degree: int, wiener_size: int) -> float:
    """Ratio of the raw estimate to the true variance on i.i.d. Gaussian noise.

    The Wiener residual removes part of white noise, so the raw estimate is
    biased low by a content-independent factor; it is measured once on a fixed
    seeded noise field and divided out.
    """
    rng = np.random.default_rng(20240101)
    noise = rng.standard_normal((512, 512))
    raw = _raw_estimate(noise, window, degree, wiener_size)
    return float(raw[window:-window, window:-window].mean())


def estimate_variance_mipod(
    image: np.ndarray,
    window: int = 9,
    degree: int = 2,
    wiener_size: int = 2,
    floor: float = VARIANCE_FLOOR,
) -> np.ndarray:
    """Per-pixel variance from a local cosine-polynomial fit of the squared Wiener residual."""
    image = np.asarray(image, dtype=np.float64)
    check_geometry(image.shape)
    raw = _raw_estimate(image, window, degree, wiener_size)
    raw /= white_noise_gain(window, degree, wiener_size)
    return np.maximum(raw, floor)


def constant_variance(shape, value: float = 1.0) -> np.ndarray:
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"constant variance must be positive, got {value}")
    check_geometry(tuple(shape))
    return np.full(tuple(shape), float(value))


def smooth_variance_dct(v: np.ndarray) -> np.ndarray:
    """Smooth a pixel variance field through its DCT-domain ``sigma^-4`` per mode.

    Each mode is averaged with the same mode of the eight neighbouring blocks
    using :data:`SMOOTHING_KERNEL`; edge blocks are replicated.
    """
    dct_var = variance_to_dct(v)
    h, w = dct_var.shape
    bh, bw = h // BLOCK, w // BLOCK
    # (bh, 8, bw, 8) -> per-mode planes (8, 8, bh, bw)
    modes = dct_var.reshape(bh, BLOCK, bw, BLOCK).transpose(1, 3, 0, 2)
    inv_sq = 1.0 / modes**2
    smoothed = ndimage.correlate(inv_sq, SMOOTHING_KERNEL[None, None], mode="nearest")
    smooth_var = np.maximum(1.0 / np.sqrt(smoothed), SMOOTHING_FLOOR)
    back = smooth_var.transpose(2, 0, 3, 1).reshape(h, w)
    return variance_to_spatial(back)
