"""Optimal ternary change rates under a payload constraint.

Minimises ``sum_n beta_n I_n beta_n^T`` subject to ``sum_n H3(beta_n) = alpha``.
For a fixed multiplier ``lam`` each coefficient solves

    beta+ I+ + beta- I+- = lam * ln((1 - beta+ - beta-) / beta+)
    beta- I- + beta+ I+- = lam * ln((1 - beta+ - beta-) / beta-)

which is the gradient of the strictly convex function
``1/2 beta I beta^T - lam * H3_nats(beta)``; a safeguarded Newton method on the
log-rates solves it for all coefficients at once. The payload, measured in
bits, grows with ``lam``; ``lam`` is bracketed by factors of 10 and refined by
regula falsi in log-log coordinates until the payload matches the target.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import lambertw

from .fisher import FisherField
from .jpeg import BLOCK, QuantizedImage
from .stego_model import ChangeRates

log = logging.getLogger(__name__)

LN2 = np.log(2.0)


class SolverError(RuntimeError):
    pass


class InfeasiblePayload(SolverError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, message: str, worst_residual: float):
        super().__init__(f"{message} (worst residual {worst_residual:.3e})")
        self.worst_residual = worst_residual


@dataclass
class SolverConfig:
    payload: float
    payload_unit: str = "bpnzac"
    lambda_start: float = 1.0
    newton_tol: float = 1e-10
    payload_tol: float = 1e-4
    max_newton_iters: int = 200
    max_bisection_iters: int = 80

    def __post_init__(self):
        if self.payload < 0:
            raise ValueError("payload must be nonnegative")
        if self.payload_unit not in ("bpnzac", "bits"):
            raise ValueError(f"unknown payload unit {self.payload_unit!r}")
        if self.newton_tol <= 0 or self.payload_tol <= 0 or self.lambda_start <= 0:
            raise ValueError("tolerances and the starting multiplier must be positive")


def _xlogx(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def entropy_nats(plus, minus) -> np.ndarray:
    plus = np.asarray(plus, dtype=np.float64)
    minus = np.asarray(minus, dtype=np.float64)
    rest = np.clip(1.0 - plus - minus, 0.0, 1.0)
    return -(_xlogx(plus) + _xlogx(minus) + _xlogx(rest))


def ternary_entropy(plus, minus):
    """Ternary entropy in bits, with ``0 log 0 = 0``."""
    p = np.asarray(plus, dtype=np.float64)
    m = np.asarray(minus, dtype=np.float64)
    eps = 1e-12
    if np.any(p < -eps) or np.any(m < -eps) or np.any(p + m > 1 + eps):
        raise ValueError("change rates must lie in the probability simplex")
    h = entropy_nats(np.clip(p, 0, 1), np.clip(m, 0, 1)) / LN2
    return float(h) if h.ndim == 0 else h


def payload_capacity(q: QuantizedImage, alpha: float = 1.0, unit: str = "bpnzac") -> float:
    """Payload in bits for a relative payload ``alpha``.

    For ``bpnzac`` the denominator counts AC coefficients (mode != (0, 0))
    that are nonzero; for ``bits`` ``alpha`` is already absolute.
    """
    if unit == "bits":
        return float(alpha)
    if unit != "bpnzac":
        raise ValueError(f"unknown payload unit {unit!r}")
    ac = np.ones((BLOCK, BLOCK), dtype=bool)
    ac[0, 0] = False
    ac_plane = np.tile(ac, (q.height // BLOCK, q.width // BLOCK))
    nzac = int(np.count_nonzero(q.coeffs[ac_plane]))
    if nzac == 0 and alpha > 0:
        raise InfeasiblePayload("image has no nonzero AC coefficients")
    return float(alpha) * nzac


def rates_to_costs(b: ChangeRates) -> tuple[np.ndarray, np.ndarray]:
    """``rho+- = ln((1 - beta+ - beta-) / beta+-)``; degenerate rates map to ``+inf``."""
    rest = 1.0 - b.plus - b.minus
    with np.errstate(divide="ignore", invalid="ignore"):
        rho_p = np.log(rest / b.plus)
        rho_m = np.log(rest / b.minus)
    bad = ~(rest > 0)
    rho_p = np.where(bad | ~(b.plus > 0), np.inf, rho_p)
    rho_m = np.where(bad | ~(b.minus > 0), np.inf, rho_m)
    return rho_p, rho_m


def costs_to_rates(rho_plus, rho_minus, lam: float = 1.0) -> ChangeRates:
    if lam <= 0:
        raise ValueError("lambda must be positive")
    ep = np.exp(-lam * np.asarray(rho_plus, dtype=np.float64))
    em = np.exp(-lam * np.asarray(rho_minus, dtype=np.float64))
    z = 1.0 + ep + em
    return ChangeRates(ep / z, em / z)


def _lambert_start(z, cap):
    """Log of the root of ``z b = ln(1/b)``, i.e. ``b = W(z)/z``, capped at ``cap``."""
    out = np.full(z.shape, np.log(cap))
    big = z > 1e-12
    w = np.real(lambertw(z[big]))
    # ln(W(z)/z) = -W(z)
    out[big] = np.minimum(-w, np.log(cap))
    return out


# rates below the smallest normal double are returned as 0: subnormals keep
# too few digits for their logarithm to satisfy the stationarity equations
_LOG_TINY = float(np.log(np.finfo(np.float64).tiny))


def _flush(t):
    return np.where(t < _LOG_TINY, 0.0, np.exp(t))


def _update(t, y):
    """Apply a Newton step given as a relative change ``y = d beta / beta``.

    Decreasing steps are taken multiplicatively (``beta e^y``), increasing steps
    linearly (``beta (1 + y)``); for the convex log-odds equations both
    approach the root from their own side without overshooting.
    """
    return t + np.where(y < 0, y, np.log1p(np.maximum(y, 0.0)))


def _limit_growth(tp, tm, yp, ym):
    """Scale increasing steps so that ``beta+ + beta-`` stays below 1."""
    p, m = np.exp(tp), np.exp(tm)
    rest = 1.0 - p - m
    grow = p * np.maximum(yp, 0.0) + m * np.maximum(ym, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(grow > 0, np.minimum(1.0, 0.99 * rest / grow), 1.0)
    return np.where(yp > 0, yp * scale, yp), np.where(ym > 0, ym * scale, ym)


def _newton_pair(jp, jm, jx, tol, max_iters):
    """Newton iteration for coefficients whose both directions are free.

    ``jp, jm, jx`` are the Fisher entries divided by ``lam``. State is kept as
    log-rates so that rates far below the double-precision range stay
    representable. The relative step ``y = d beta / beta`` solves
    ``diag(beta) H diag(beta) y = -diag(beta) g`` in closed form.
    """
    tp = _lambert_start(jp, 1.0 / 3.0)
    tm = _lambert_start(jm, 1.0 / 3.0)
    active = np.arange(tp.size)
    worst = np.inf
    for _ in range(max_iters):
        a_p, a_m = tp[active], tm[active]
        j_p, j_m, j_x = jp[active], jm[active], jx[active]
        p, m = np.exp(a_p), np.exp(a_m)
        rest = 1.0 - p - m
        lr = np.log(rest)
        gp = j_p * p + j_x * m - lr + a_p
        gm = j_m * m + j_x * p - lr + a_m
        # terms of size ~1/eps cancel in g, so the tolerance is relative
        scale_p = 1.0 + np.abs(a_p) + np.abs(j_p * p) + np.abs(j_x * m)
        scale_m = 1.0 + np.abs(a_m) + np.abs(j_m * m) + np.abs(j_x * p)
        res = np.maximum(np.abs(gp) / scale_p, np.abs(gm) / scale_m)
        done = res < tol
        if np.all(done):
            return _flush(tp), _flush(tm)
        keep = ~done
        active = active[keep]
        a_p, a_m, p, m, rest = a_p[keep], a_m[keep], p[keep], m[keep], rest[keep]
        gp, gm = gp[keep], gm[keep]
        ap = p * j_p[keep] + 1.0 + p / rest
        am = m * j_m[keep] + 1.0 + m / rest
        coupling = j_x[keep] + 1.0 / rest
        den = 1.0 - p * m * coupling**2 / (ap * am)
        yp = -(gp / ap - m * coupling * gm / (ap * am)) / den
        ym = -(gm / am - p * coupling * gp / (ap * am)) / den
        yp, ym = _limit_growth(a_p, a_m, yp, ym)
        tp[active] = _update(a_p, yp)
        tm[active] = _update(a_m, ym)
        worst = float(res[keep].max())
    raise ConvergenceError("Newton iteration did not converge", worst)


def _newton_single(j, tol, max_iters):
    """Newton iteration for coefficients with exactly one free direction (binary entropy)."""
    t = _lambert_start(j, 0.5)
    active = np.arange(t.size)
    worst = np.inf
    for _ in range(max_iters):
        a, j_a = t[active], j[active]
        x = np.exp(a)
        rest = 1.0 - x
        g = j_a * x - np.log(rest) + a
        res = np.abs(g) / (1.0 + np.abs(a) + np.abs(j_a * x))
        done = res < tol
        if np.all(done):
            return _flush(t)
        keep = ~done
        active = active[keep]
        a, x, rest, g = a[keep], x[keep], rest[keep], g[keep]
        y = -g / (x * j_a[keep] + 1.0 + x / rest)
        y, _ = _limit_growth(a, np.full_like(a, -np.inf), y, np.zeros_like(y))
        t[active] = _update(a, y)
        worst = float(res[keep].max())
    raise ConvergenceError("Newton iteration did not converge", worst)


def rates_for_lambda(fisher: FisherField, lam: float, tol: float = 1e-10, max_iters: int = 200) -> ChangeRates:
    """Solve the per-coefficient stationarity equations for a fixed multiplier."""
    ip = np.asarray(fisher.plus, dtype=np.float64).ravel()
    im = np.asarray(fisher.minus, dtype=np.float64).ravel()
    ix = np.asarray(fisher.cross, dtype=np.float64).ravel()
    free_p = np.isfinite(ip)
    free_m = np.isfinite(im)
    plus = np.zeros(ip.size)
    minus = np.zeros(im.size)
    pair = free_p & free_m
    if pair.any():
        plus[pair], minus[pair] = _newton_pair(ip[pair] / lam, im[pair] / lam, ix[pair] / lam, tol, max_iters)
    only_p = free_p & ~free_m
    if only_p.any():
        plus[only_p] = _newton_single(ip[only_p] / lam, tol, max_iters)
    only_m = free_m & ~free_p
    if only_m.any():
        minus[only_m] = _newton_single(im[only_m] / lam, tol, max_iters)
    shape = fisher.shape
    return ChangeRates(plus.reshape(shape), minus.reshape(shape))


def kkt_residual(fisher: FisherField, b: ChangeRates, lam: float) -> float:
    """Largest stationarity residual over free directions, in log-odds units.

    Each residual is divided by ``1 +`` the magnitudes of the terms it
    balances, since those can reach ``1e7`` and cancel to double precision.
    A free direction whose rate is exactly 0 counts as satisfied when its
    equation puts the log-rate below the normal double range.
    """
    rest = 1.0 - b.plus - b.minus
    free_p = np.isfinite(fisher.plus)
    free_m = np.isfinite(fisher.minus)
    worst = 0.0
    ip = np.where(free_p, fisher.plus, 0.0)
    im = np.where(free_m, fisher.minus, 0.0)
    tp = ip * b.plus / lam
    tm = im * b.minus / lam
    xp = fisher.cross * b.minus / lam
    xm = fisher.cross * b.plus / lam
    lhs_p, lhs_m = tp + xp, tm + xm
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.log(rest)
        lp, lm = np.log(b.plus), np.log(b.minus)
        rp = (lhs_p - lr + lp) / (1.0 + np.abs(tp) + np.abs(xp) + np.abs(lr) + np.abs(lp))
        rm = (lhs_m - lr + lm) / (1.0 + np.abs(tm) + np.abs(xm) + np.abs(lr) + np.abs(lm))
    rp = np.where(b.plus == 0, np.maximum(0.0, (lr - lhs_p) - _LOG_TINY), rp)
    rm = np.where(b.minus == 0, np.maximum(0.0, (lr - lhs_m) - _LOG_TINY), rm)
    if free_p.any():
        worst = max(worst, float(np.max(np.abs(rp[free_p]))))
    if free_m.any():
        worst = max(worst, float(np.max(np.abs(rm[free_m]))))
    return worst


def capacity_bits(fisher: FisherField) -> float:
    free = np.isfinite(fisher.plus).astype(int) + np.isfinite(fisher.minus).astype(int)
    return float(np.sum(np.log2(free + 1)))


def payload_bits(b: ChangeRates) -> float:
    return float(np.sum(entropy_nats(b.plus, b.minus)) / LN2)


def solve_change_rates(fisher: FisherField, cfg: SolverConfig, nzac: int | None = None) -> tuple[ChangeRates, float]:
    """Rates meeting the payload ``cfg.payload`` and their multiplier ``lam``.

    For ``bpnzac`` payloads the nonzero-AC count ``nzac`` must be supplied.
    A zero payload returns all-zero rates with ``lam = 0``.
    """
    if cfg.payload_unit == "bpnzac":
        if nzac is None:
            raise ValueError("a bpnzAC payload needs the nonzero AC count")
        if nzac == 0 and cfg.payload > 0:
            raise InfeasiblePayload("image has no nonzero AC coefficients")
        target = cfg.payload * nzac
    else:
        target = cfg.payload
    if target == 0:
        return ChangeRates.zeros(fisher.shape), 0.0
    capacity = capacity_bits(fisher)
    if target >= capacity:
        raise InfeasiblePayload(f"payload {target:.1f} bits exceeds capacity {capacity:.1f} bits")

    def evaluate(lam):
        rates = rates_for_lambda(fisher, lam, cfg.newton_tol, cfg.max_newton_iters)
        return rates, payload_bits(rates)

    def close(bits):
        return abs(bits - target) <= cfg.payload_tol * target

    lam = cfg.lambda_start
    rates, bits = evaluate(lam)
    if close(bits):
        return rates, lam
    # payload grows with lam
    factor = 0.1 if bits > target else 10.0
    prev_lam, prev_bits = lam, bits
    for _ in range(2000):
        lam *= factor
        rates, bits = evaluate(lam)
        if close(bits):
            return rates, lam
        if (bits > target) != (prev_bits > target):
            break
        prev_lam, prev_bits = lam, bits
    else:
        raise SolverError("could not bracket the multiplier")

    # Illinois regula falsi on log(bits) - log(target) against log(lam); the
    # bracket always holds the root, so it cannot do worse than bisection by
    # more than a constant factor
    log_t = np.log(target)

    def f(b):
        return np.log(max(b, 1e-300)) - log_t

    xa, fa = np.log(prev_lam), f(prev_bits)
    xb, fb = np.log(lam), f(bits)
    side = 0
    for _ in range(cfg.max_bisection_iters):
        x = xb - fb * (xb - xa) / (fb - fa)
        if not (min(xa, xb) < x < max(xa, xb)):
            x = 0.5 * (xa + xb)
        lam = float(np.exp(x))
        rates, bits = evaluate(lam)
        log.debug("lambda %.6e payload %.3f / %.3f bits", lam, bits, target)
        if close(bits):
            return rates, lam
        fx = f(bits)
        if (fx > 0) == (fb > 0):
            xb, fb = x, fx
            if side == -1:
                fa /= 2.0
            side = -1
        else:
            xa, fa = xb, fb
            xb, fb = x, fx
            if side == 1:
                fa /= 2.0
            side = 1
    raise ConvergenceError("payload search did not converge", abs(bits - target) / target)
