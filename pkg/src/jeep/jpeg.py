"""Blockwise 8x8 DCT, quantization and variance propagation.

Every per-coefficient array in this package uses the spatial JPEG layout:
an ``(H, W)`` plane whose ``8x8`` tile at block ``(bi, bj)`` holds the
coefficients ``c_kl`` of that block, with ``k`` indexing rows and ``l``
columns. This keeps pixel fields and coefficient fields on the same grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BLOCK = 8
COEF_MIN = -1024
COEF_MAX = 1020

# IJG / Annex K luminance base table, row-major (k, l)
LUMINANCE_BASE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)


class GeometryError(ValueError):
    """Image or field dimensions are incompatible with 8x8 block processing."""


def _omega(k):
    return np.where(k == 0, 1.0 / np.sqrt(2.0), 1.0)


def dct_basis(k: int, l: int, i: int, j: int) -> float:
    """Return the 2D-DCT basis value ``f_kl^ij``."""
    for v in (k, l, i, j):
        if not 0 <= v < BLOCK:
            raise IndexError(f"index {v} outside 0..7")
    return float(
        _omega(k) * _omega(l) / 4.0
        * np.cos(np.pi * k * (2 * i + 1) / 16.0)
        * np.cos(np.pi * l * (2 * j + 1) / 16.0)
    )


def _cosine_matrix() -> np.ndarray:
    k = np.arange(BLOCK)[:, None]
    i = np.arange(BLOCK)[None, :]
    return _omega(k) / 2.0 * np.cos(np.pi * k * (2 * i + 1) / 16.0)


# C[k, i]; f_kl^ij = C[k, i] * C[l, j]
DCT_1D = _cosine_matrix()
# D[(k, l), (i, j)] as a 64x64 matrix, row index 8k+l, column index 8i+j
DCT_MATRIX = np.kron(DCT_1D, DCT_1D)
DCT_SQ = DCT_MATRIX**2


def check_geometry(shape) -> None:
    if len(shape) != 2:
        raise GeometryError(f"expected a 2D plane, got shape {shape}")
    h, w = shape
    if h == 0 or w == 0 or h % BLOCK or w % BLOCK:
        raise GeometryError(f"dimensions {w}x{h} are not positive multiples of 8")


def to_blocks(plane: np.ndarray) -> np.ndarray:
    """``(H, W)`` plane -> ``(H/8, W/8, 8, 8)`` block view (copy)."""
    check_geometry(plane.shape)
    h, w = plane.shape
    return plane.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK).transpose(0, 2, 1, 3).copy()


def from_blocks(blocks: np.ndarray) -> np.ndarray:
    bh, bw = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(bh * BLOCK, bw * BLOCK)


def to_vectors(plane: np.ndarray) -> np.ndarray:
    """``(H, W)`` plane -> ``(H/8, W/8, 64)`` with in-block row-major order."""
    b = to_blocks(plane)
    return b.reshape(b.shape[0], b.shape[1], BLOCK * BLOCK)


def from_vectors(vectors: np.ndarray) -> np.ndarray:
    return from_blocks(vectors.reshape(vectors.shape[0], vectors.shape[1], BLOCK, BLOCK))


def tile_table(table: np.ndarray, shape) -> np.ndarray:
    """Repeat an 8x8 per-mode table over a plane of the given shape."""
    h, w = shape
    return np.tile(np.asarray(table), (h // BLOCK, w // BLOCK))


def dct_forward(block: np.ndarray) -> np.ndarray:
    """Level-shifted forward DCT of one 8x8 block (or a stack of them)."""
    x = np.asarray(block, dtype=np.float64) - 128.0
    return DCT_1D @ x @ DCT_1D.T


def dct_inverse(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dct_forward`; adds the 128 level shift back."""
    return DCT_1D.T @ np.asarray(coeffs, dtype=np.float64) @ DCT_1D + 128.0


def blockwise_dct(plane: np.ndarray) -> np.ndarray:
    """Unshifted blockwise DCT ``D x`` of a full plane."""
    b = to_blocks(np.asarray(plane, dtype=np.float64))
    return from_blocks(DCT_1D @ b @ DCT_1D.T)


def blockwise_idct(plane: np.ndarray) -> np.ndarray:
    """Unshifted blockwise inverse DCT ``D^T c`` of a full plane."""
    b = to_blocks(np.asarray(plane, dtype=np.float64))
    return from_blocks(DCT_1D.T @ b @ DCT_1D)


@dataclass(frozen=True)
class QuantTable:
    steps: np.ndarray

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.int64)
        if steps.shape != (BLOCK, BLOCK):
            raise ValueError(f"quantization table must be 8x8, got {steps.shape}")
        if np.any(steps < 1):
            raise ValueError("quantization steps must be >= 1")
        object.__setattr__(self, "steps", steps)

    def __eq__(self, other):
        return isinstance(other, QuantTable) and np.array_equal(self.steps, other.steps)

    __hash__ = None


def quality_to_quant_table(qf: int) -> QuantTable:
    """IJG luminance table for quality factor ``qf`` in 1..100."""
    if not isinstance(qf, (int, np.integer)) or not 1 <= qf <= 100:
        raise ValueError(f"quality factor must be an integer in 1..100, got {qf!r}")
    scale = 5000 // qf if qf < 50 else 200 - 2 * qf
    steps = (LUMINANCE_BASE * scale + 50) // 100
    return QuantTable(np.clip(steps, 1, 255))


@dataclass
class QuantizedImage:
    """Quantized DCT coefficients in spatial block layout plus their table."""

    coeffs: np.ndarray
    quant: QuantTable

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.int64)
        check_geometry(self.coeffs.shape)
        if self.coeffs.size and (self.coeffs.min() < COEF_MIN or self.coeffs.max() > COEF_MAX):
            raise ValueError(f"coefficients outside [{COEF_MIN}, {COEF_MAX}]")

    @property
    def shape(self):
        return self.coeffs.shape

    @property
    def width(self) -> int:
        return self.coeffs.shape[1]

    @property
    def height(self) -> int:
        return self.coeffs.shape[0]

    def steps_plane(self) -> np.ndarray:
        return tile_table(self.quant.steps, self.shape).astype(np.float64)


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def check_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    check_geometry(image.shape)
    if image.size and (image.min() < 0 or image.max() > 255):
        raise ValueError("pixel values must lie in [0, 255]")
    return image


def scaled_coefficients(image: np.ndarray, quant: QuantTable) -> np.ndarray:
    """``d_kl / q_kl`` for every coefficient of a level-shifted image."""
    image = check_image(image)
    d = blockwise_dct(image.astype(np.float64) - 128.0)
    return d / tile_table(quant.steps, image.shape)


def compress(image: np.ndarray, quant: QuantTable, rounding: str = "nearest") -> QuantizedImage:
    ratio = scaled_coefficients(image, quant)
    if rounding == "nearest":
        c = round_half_away(ratio)
    elif rounding == "toward_zero":
        c = np.trunc(ratio)
    else:
        raise ValueError(f"unknown rounding rule {rounding!r}")
    return QuantizedImage(np.clip(c, COEF_MIN, COEF_MAX).astype(np.int64), quant)


def decompress(q: QuantizedImage) -> np.ndarray:
    """Real-valued decompressed pixels ``D^T Q c + 128`` (no rounding, no clipping)."""
    return blockwise_idct(q.coeffs * q.steps_plane()) + 128.0


def to_pixels(y: np.ndarray) -> np.ndarray:
    """Round and clip a real-valued plane to 8-bit samples, for viewing/export."""
    return np.clip(round_half_away(y), 0, 255).astype(np.uint8)


def variance_to_dct(v: np.ndarray) -> np.ndarray:
    """Diagonal of ``D diag(v) D^T`` per block: ``sigma2_kl = sum (f_kl^ij)^2 sigma2_ij``."""
    vec = to_vectors(np.asarray(v, dtype=np.float64))
    return from_vectors(vec @ DCT_SQ.T)


def variance_to_spatial(v: np.ndarray) -> np.ndarray:
    """Diagonal of ``D^T diag(v) D`` per block."""
    vec = to_vectors(np.asarray(v, dtype=np.float64))
    return from_vectors(vec @ DCT_SQ)


def rounding_noise_variance(quant: QuantTable, shape, u_variance: float = 1.0 / 12.0) -> np.ndarray:
    """Per-pixel variance ``s_ij`` of ``y - x`` when every ``u_kl`` has variance ``u_variance``."""
    mode_var = tile_table(quant.steps.astype(np.float64) ** 2 * u_variance, shape)
    return variance_to_spatial(mode_var)
