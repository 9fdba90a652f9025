"""Security analytics: KL divergence, likelihood-ratio-test moments and detection bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .fisher import FisherField
from .jpeg import DCT_SQ, QuantTable, blockwise_idct, from_vectors, tile_table, to_blocks, to_vectors
from .stego_model import ChangeRates, PixelMoments


@dataclass(frozen=True)
class LrtMoments:
    """Summed mean and variance of the log-likelihood ratio under both hypotheses."""

    mean0: float
    var0: float
    mean1: float
    var1: float


@dataclass(frozen=True)
class LrtReport:
    delta: float
    rho: float
    kl_sum: float
    pd: tuple[tuple[float, float], ...]
    sanov_bound: float

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "rho": self.rho,
            "kl_nats": self.kl_sum,
            "pd": [{"pfa": f, "pd": d} for f, d in self.pd],
            "sanov_bound": self.sanov_bound,
        }


def _pair(cover_var, moments: PixelMoments):
    var0 = np.asarray(cover_var, dtype=np.float64)
    var1 = np.asarray(moments.var, dtype=np.float64)
    mu = np.asarray(moments.mu, dtype=np.float64)
    if var0.shape != var1.shape or mu.shape != var0.shape:
        raise ValueError("cover and stego fields must share a shape")
    if np.any(var0 <= 0) or np.any(var1 <= 0):
        raise ValueError("variances must be positive")
    return var0, var1, mu


def residual(decompressed: np.ndarray, precover: np.ndarray, u: np.ndarray, quant: QuantTable) -> np.ndarray:
    """Pixel residual ``e = y - x + D^T Q u``; identically zero for an unmodified cover."""
    y = np.asarray(decompressed, dtype=np.float64)
    x = np.asarray(precover, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if not (y.shape == x.shape == u.shape):
        raise ValueError(f"geometry mismatch: {y.shape}, {x.shape}, {u.shape}")
    q = tile_table(quant.steps.astype(np.float64), u.shape)
    return y - x + blockwise_idct(q * u)


def kl_exact(cover_var, moments: PixelMoments) -> tuple[np.ndarray, float]:
    """Gaussian KL divergence of stego from cover, per 8x8 block and in total (nats)."""
    var0, var1, mu = _pair(cover_var, moments)
    # log(var1/var0) + (var0 - var1)/var1 = -log1p(-x) - x with x = (var1 - var0)/var1,
    # written this way to stay accurate when the variances nearly agree
    x = (var1 - var0) / var1
    per_pixel = 0.5 * (-np.log1p(-x) - x + mu * mu / var1)
    per_block = to_blocks(per_pixel).sum(axis=(2, 3))
    return per_block, math.fsum(per_block.ravel())


def kl_taylor(fisher: FisherField, b: ChangeRates) -> float:
    """Second-order KL ``1/2 sum beta H beta^T`` with ``H`` the KL Hessian at zero rates.

    ``H`` is half the stored Fisher matrix, so this is ``1/4 sum beta I beta^T``.
    Blocked directions carry zero rate and contribute nothing.
    """
    hess = fisher.kl_hessian()
    p, m = b.plus, b.minus
    ip = np.where(np.isfinite(hess.plus), hess.plus, 0.0)
    im = np.where(np.isfinite(hess.minus), hess.minus, 0.0)
    quad = p * p * ip + 2.0 * p * m * hess.cross + m * m * im
    return 0.5 * math.fsum(quad.ravel())


def kl_taylor_block(b: ChangeRates, u: np.ndarray, quant: QuantTable, cover_var, with_mean: bool) -> float:
    """Full second-order KL of a rate field, keeping the coupling between coefficients of a block.

    The first-order variance change of pixel ``ij`` is
    ``sum_kl (f_kl^ij)^2 q_kl^2 ((1 - 2u)^2 beta+ + (1 + 2u)^2 beta-)``; the
    quadratic KL is ``1/4 sum (dvar / sigma^2)^2`` plus ``1/2 sum mu^2 / sigma^2``
    when the mean shift is observable. Restricted to one coefficient it equals
    :func:`kl_taylor`.
    """
    var = np.asarray(cover_var, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    q = tile_table(quant.steps.astype(np.float64), var.shape)
    slope = q * q * ((1.0 - 2.0 * u) ** 2 * b.plus + (1.0 + 2.0 * u) ** 2 * b.minus)
    dvar = from_vectors(to_vectors(slope) @ DCT_SQ)
    total = 0.25 * math.fsum(((dvar / var) ** 2).ravel())
    if with_mean:
        mu = blockwise_idct(q * (b.plus - b.minus))
        total += 0.5 * math.fsum((mu * mu / var).ravel())
    return total


def lrt_moments(cover_var, moments: PixelMoments) -> LrtMoments:
    """Exact moments of the Gaussian log-likelihood ratio summed over pixels.

    Per pixel ``L(e) = c + b e + a e^2`` with ``a = (s1 - s0)/(2 s0 s1)``,
    ``b = mu/s1`` and ``c = log(s0/s1)/2 - mu^2/(2 s1)``.
    """
    s0, s1, mu = _pair(cover_var, moments)
    a = (s1 - s0) / (2.0 * s0 * s1)
    b = mu / s1
    c = 0.5 * np.log(s0 / s1) - mu * mu / (2.0 * s1)
    mean0 = c + a * s0
    var0 = 2.0 * a * a * s0 * s0 + b * b * s0
    mean1 = c + a * (s1 + mu * mu) + b * mu
    var1 = (2.0 * a * mu + b) ** 2 * s1 + 2.0 * a * a * s1 * s1
    return LrtMoments(*(math.fsum(x.ravel()) for x in (mean0, var0, mean1, var1)))


def lrt_statistics(cover_var, moments: PixelMoments, form: str = "printed") -> tuple[float, float]:
    """Deflection ``delta`` and variance effect ``rho`` of the LRT.

    ``form="printed"`` evaluates the published closed forms verbatim, including
    the term ``s1 - s0 + mu`` that adds a mean to a variance. ``form="derived"``
    uses :func:`lrt_moments`: ``delta = (E1 - E0)/sqrt(V0)`` and ``rho = V1/V0``.
    With no embedding both return ``(0, 1)``.
    """
    s0, s1, mu = _pair(cover_var, moments)
    if form == "derived":
        mom = lrt_moments(s0, moments)
        if mom.var0 == 0.0:
            return 0.0, 1.0
        return (mom.mean1 - mom.mean0) / math.sqrt(mom.var0), mom.var1 / mom.var0
    if form != "printed":
        raise ValueError(f"unknown form {form!r}")
    diff = s1 - s0
    num = math.fsum((((diff * diff) + mu * mu * (3.0 * s0 - s1)) / (2.0 * s0 * s1)).ravel())
    den = math.fsum(((s0 / s1) * (diff + mu)).ravel())
    rho_num = math.fsum((((s1 + 2.0 * mu * mu) / s0) * diff + mu).ravel())
    if den == 0.0:
        return 0.0, 1.0
    if den < 0.0:
        raise ArithmeticError("printed variance term is negative; use form='derived'")
    return num / math.sqrt(den), rho_num / den


def normalized_statistic(e: np.ndarray, cover_var, moments: PixelMoments):
    """LRT statistic ``Lambda*`` of residual ``e``, standardised under the cover hypothesis.

    ``e`` may carry leading batch axes; one statistic is returned per residual field.
    """
    s0, s1, mu = _pair(cover_var, moments)
    e = np.asarray(e, dtype=np.float64)
    if e.shape[-2:] != s0.shape:
        raise ValueError(f"residual shape {e.shape} does not end in {s0.shape}")
    a = (s1 - s0) / (2.0 * s0 * s1)
    b = mu / s1
    c = 0.5 * np.log(s0 / s1) - mu * mu / (2.0 * s1)
    stat = (c + b * e + a * e * e).sum(axis=(-2, -1))
    mom = lrt_moments(s0, moments)
    if mom.var0 == 0.0:
        raise ArithmeticError("statistic is degenerate without embedding")
    out = (stat - mom.mean0) / math.sqrt(mom.var0)
    return float(out) if out.ndim == 0 else out


def detection_probability(pfa, delta: float, rho: float):
    """``P_D = Q((Q^-1(P_FA) - delta) / sqrt(rho))`` with ``Q`` the Gaussian upper tail."""
    pfa = np.asarray(pfa, dtype=np.float64)
    if np.any((pfa <= 0) | (pfa >= 1)):
        raise ValueError("P_FA must lie in (0, 1)")
    if not rho > 0:
        raise ValueError("rho must be positive")
    out = norm.sf((norm.isf(pfa) - delta) / math.sqrt(rho))
    return float(out) if out.ndim == 0 else out


def sanov_bound(kl_sum: float) -> float:
    """Upper bound ``1 - exp(-KL)`` on the detection probability."""
    if kl_sum < 0:
        raise ValueError("KL divergence must be nonnegative")
    return float(-math.expm1(-kl_sum))


def lrt_report(cover_var, moments: PixelMoments, pfas, form: str = "derived") -> LrtReport:
    _, kl = kl_exact(cover_var, moments)
    delta, rho = lrt_statistics(cover_var, moments, form=form)
    pd = tuple((float(f), float(detection_probability(f, delta, rho))) for f in pfas)
    return LrtReport(delta, rho, kl, pd, sanov_bound(kl))
