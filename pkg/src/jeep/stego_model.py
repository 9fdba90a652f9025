"""Closed-form moments of decompressed cover and stego pixels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jpeg import DCT_SQ, QuantTable, blockwise_idct, from_vectors, tile_table, to_vectors


@dataclass
class ChangeRates:
    """Per-coefficient probabilities of a +1 (``plus``) and -1 (``minus``) change."""

    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        self.plus = np.asarray(self.plus, dtype=np.float64)
        self.minus = np.asarray(self.minus, dtype=np.float64)
        if self.plus.shape != self.minus.shape:
            raise ValueError("plus and minus rates must share a shape")

    @classmethod
    def zeros(cls, shape) -> "ChangeRates":
        return cls(np.zeros(shape), np.zeros(shape))

    @property
    def shape(self):
        return self.plus.shape

    def validate(self, atol: float = 1e-12) -> None:
        if not (np.all(np.isfinite(self.plus)) and np.all(np.isfinite(self.minus))):
            raise ValueError("change rates must be finite")
        if self.plus.min(initial=0.0) < -atol or self.minus.min(initial=0.0) < -atol:
            raise ValueError("change rates must be nonnegative")
        if (self.plus + self.minus).max(initial=0.0) > 1.0 + atol:
            raise ValueError("change rates must satisfy plus + minus <= 1")

    def scaled(self, factor: float) -> "ChangeRates":
        return ChangeRates(self.plus * factor, self.minus * factor)


@dataclass
class PixelMoments:
    """Mean shift ``mu`` and stego variance ``var`` of every decompressed pixel."""

    mu: np.ndarray
    var: np.ndarray


def eta_moments(b: ChangeRates) -> tuple[np.ndarray, np.ndarray]:
    """Mean and variance of the ternary change ``eta``."""
    mean = b.plus - b.minus
    return mean, b.plus + b.minus - mean**2


def covariance_eta_u(b: ChangeRates, u) -> np.ndarray:
    """Approximate ``Cov(eta, U)`` obtained from ``E[eta U] = 3 E[eta] E[U] - 2 E[eta^2] E[U^2]``."""
    u = np.asarray(u, dtype=np.float64)
    return 2.0 * (b.plus - b.minus) * u - 2.0 * (b.plus + b.minus) * u**2


def lemma1_holds(b: ChangeRates, u, atol: float = 0.0) -> np.ndarray:
    """Whether ``3 E[eta] u >= 2 E[eta^2] u^2`` holds.

    The mirrored case (``beta- >= 2 beta+``, ``u <= 0``) is the same inequality,
    since ``(beta+ - beta-) u = (beta- - beta+)(-u)``.
    """
    u = np.asarray(u, dtype=np.float64)
    lhs = 3.0 * (b.plus - b.minus) * u
    rhs = 2.0 * (b.plus + b.minus) * u**2
    return lhs >= rhs - atol


def stego_variance_increment(b: ChangeRates, u: np.ndarray) -> np.ndarray:
    """Per-coefficient ``Var(eta) - 2 Cov(eta, U)`` in units of ``q^2``.

    Expanding gives ``beta+ (1 - 2u)^2 + beta- (1 + 2u)^2 - (beta+ - beta-)^2``.
    """
    mean, var = eta_moments(b)
    return var - 2.0 * covariance_eta_u(b, u)


def stego_moments(
    b: ChangeRates,
    u: np.ndarray,
    quant: QuantTable,
    cover_var: np.ndarray,
    with_mean: bool = True,
    floor: float | None = None,
) -> PixelMoments:
    """Stego pixel moments relative to the cover model.

    ``mu = D^T Q (beta+ - beta-)`` and
    ``var = sigma^2 + sum_kl (f_kl^ij)^2 q_kl^2 (Var(eta) - 2 Cov(eta, U))``.
    ``with_mean=False`` gives the realistic-attacker model where ``mu = 0``.
    The covariance approximation does not keep ``var`` positive for large rates
    with ``|u|`` near 1/2; by default that raises, while ``floor`` clamps it.
    """
    cover_var = np.asarray(cover_var, dtype=np.float64)
    q = tile_table(quant.steps.astype(np.float64), cover_var.shape)
    increment = q**2 * stego_variance_increment(b, u)
    var = cover_var + from_vectors(to_vectors(increment) @ DCT_SQ)
    if floor is not None:
        var = np.maximum(var, floor)
    elif np.any(var <= 0):
        raise ArithmeticError("non-positive stego variance")
    if with_mean:
        mu = blockwise_idct(q * (b.plus - b.minus))
    else:
        mu = np.zeros_like(cover_var)
    return PixelMoments(mu, var)
