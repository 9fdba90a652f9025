"""DCT rounding errors and the wet (non-modifiable) coefficient masks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jpeg import (
    BLOCK,
    COEF_MAX,
    COEF_MIN,
    QuantizedImage,
    QuantTable,
    round_half_away,
    scaled_coefficients,
)

RATIONAL_MODES = ((0, 0), (0, 4), (4, 0), (4, 4))
DEFAULT_WET_THRESHOLD = 0.45


@dataclass
class WetMask:
    """Per-direction wetness: ``plus[n]`` forbids +1 at coefficient n, ``minus[n]`` forbids -1."""

    plus: np.ndarray
    minus: np.ndarray

    @classmethod
    def dry(cls, shape) -> "WetMask":
        return cls(np.zeros(shape, dtype=bool), np.zeros(shape, dtype=bool))

    def __or__(self, other: "WetMask") -> "WetMask":
        return WetMask(self.plus | other.plus, self.minus | other.minus)

    @property
    def both(self) -> np.ndarray:
        return self.plus & self.minus

    @property
    def any(self) -> np.ndarray:
        return self.plus | self.minus


def extract_side_info(image: np.ndarray, quant: QuantTable) -> tuple[QuantizedImage, np.ndarray]:
    """Compress with nearest rounding and return ``(cover, u)`` where ``c + u = d/q``."""
    ratio = scaled_coefficients(image, quant)
    c = round_half_away(ratio)
    u = ratio - c
    return QuantizedImage(c.astype(np.int64), quant), u


def rational_mode_mask(u: np.ndarray, threshold: float = DEFAULT_WET_THRESHOLD) -> WetMask:
    """Make rational-mode coefficients with ``|u| >= threshold`` wet in both directions."""
    if not 0.0 < threshold < 0.5:
        raise ValueError(f"wet threshold must lie in (0, 1/2), got {threshold}")
    u = np.asarray(u, dtype=np.float64)
    h, w = u.shape
    rational = np.zeros((BLOCK, BLOCK), dtype=bool)
    for k, l in RATIONAL_MODES:
        rational[k, l] = True
    wet = np.tile(rational, (h // BLOCK, w // BLOCK)) & (np.abs(u) >= threshold)
    return WetMask(wet.copy(), wet.copy())


def saturation_mask(q: QuantizedImage) -> WetMask:
    """Block the direction that would push a coefficient outside [-1024, 1020]."""
    return WetMask(q.coeffs >= COEF_MAX, q.coeffs <= COEF_MIN)


def embedding_mask(q: QuantizedImage, u: np.ndarray, threshold: float = DEFAULT_WET_THRESHOLD) -> WetMask:
    return rational_mode_mask(u, threshold) | saturation_mask(q)
