"""Seeded simulation of ternary embedding changes and the full embedding pipeline."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import kl_exact, kl_taylor, lrt_statistics
from .fisher import fisher_base, fisher_omniscient, fisher_realistic
from .jpeg import BLOCK, QuantizedImage, quality_to_quant_table
from .side_info import DEFAULT_WET_THRESHOLD, WetMask, embedding_mask, extract_side_info, saturation_mask
from .solver import SolverConfig, payload_capacity, solve_change_rates, ternary_entropy
from .stego_model import ChangeRates, PixelMoments, lemma1_holds, stego_moments
from .variance import VARIANCE_FLOOR, constant_variance, estimate_variance_mipod, smooth_variance_dct

log = logging.getLogger(__name__)

ESTIMATORS = ("mipod", "constant")
ATTACKERS = ("realistic", "omniscient")

# coefficients per sampling chunk; a multiple of the four draws in one Philox block
CHUNK = 1 << 16


@dataclass
class EmbeddingResult:
    stego: QuantizedImage
    changes: np.ndarray
    realized_payload: float
    change_counts: tuple[int, int]
    lemma1_violations: int = 0


@dataclass
class Diagnostics:
    lam: float
    kl_nats: float
    kl_taylor_nats: float
    delta: float
    rho: float
    nzac: int
    target_bits: float
    clamped_pixels: int
    mode_plus: np.ndarray = field(repr=False)
    mode_minus: np.ndarray = field(repr=False)
    rates: ChangeRates = field(repr=False)
    u: np.ndarray = field(repr=False)
    cover: QuantizedImage = field(repr=False)
    variance: np.ndarray = field(repr=False)


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Draws ``start .. start + count - 1`` of the counter-based stream keyed by ``seed``.

    ``start`` must be a multiple of 4: each Philox counter step yields four draws.
    """
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    if start % 4:
        raise ValueError("start must be a multiple of 4")
    bitgen = np.random.Philox(key=seed)
    bitgen.advance(start // 4)
    return np.random.Generator(bitgen).random(count)


def sample_changes(plus: np.ndarray, minus: np.ndarray, seed: int, workers: int = 1) -> np.ndarray:
    """Draw ``eta in {-1, 0, +1}`` for flat rate arrays; draw ``n`` depends only on ``(seed, n)``."""
    n = plus.size
    out = np.zeros(n, dtype=np.int8)

    def work(start):
        stop = min(start + CHUNK, n)
        r = uniforms(seed, start, stop - start)
        p, m = plus[start:stop], minus[start:stop]
        out[start:stop] = np.where(r < p, 1, np.where(r < p + m, -1, 0))

    starts = range(0, n, CHUNK)
    if workers <= 1:
        for s in starts:
            work(s)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, starts))
    return out


def simulate_embedding(
    cover: QuantizedImage,
    b: ChangeRates,
    mask: WetMask | None = None,
    seed: int = 0,
    workers: int = 1,
    u: np.ndarray | None = None,
) -> EmbeddingResult:
    """Apply independent ternary changes with probabilities ``b``.

    Rates in wet directions, including those that would leave the coefficient
    range, are zeroed before sampling. ``u`` (optional) enables the count of
    coefficients violating ``3 E[eta] u >= 2 E[eta^2] u^2``.
    """
    if b.shape != cover.shape:
        raise ValueError(f"rates shape {b.shape} does not match cover {cover.shape}")
    b.validate()
    wet = saturation_mask(cover) if mask is None else mask | saturation_mask(cover)
    plus = np.where(wet.plus, 0.0, np.clip(b.plus, 0.0, 1.0))
    minus = np.where(wet.minus, 0.0, np.clip(b.minus, 0.0, 1.0))
    changes = sample_changes(plus.ravel(), minus.ravel(), seed, workers).reshape(cover.shape)
    stego = QuantizedImage(cover.coeffs + changes, cover.quant)
    payload = math.fsum(np.ravel(ternary_entropy(plus, minus)))
    violations = 0
    if u is not None:
        violations = int(np.count_nonzero(~lemma1_holds(ChangeRates(plus, minus), u)))
    counts = (int(np.count_nonzero(changes == 1)), int(np.count_nonzero(changes == -1)))
    return EmbeddingResult(stego, changes, payload, counts, violations)


def mode_histogram(changes: np.ndarray, value: int) -> np.ndarray:
    """8x8 count of ``changes == value`` per DCT mode."""
    h, w = changes.shape
    hits = (changes == value).reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK)
    return hits.sum(axis=(0, 2))


def embed_pipeline(
    image: np.ndarray,
    qf: int,
    alpha: float,
    estimator: str = "mipod",
    attacker: str = "realistic",
    seed: int = 0,
    const_var: float = 1.0,
    wet_threshold: float = DEFAULT_WET_THRESHOLD,
    workers: int = 1,
    solver_cfg: SolverConfig | None = None,
) -> tuple[EmbeddingResult, Diagnostics]:
    """Compress, derive side information and change rates, and simulate embedding.

    ``estimator="constant"`` uses a flat variance ``const_var`` and skips the
    DCT-domain smoothing. Stego variances the model drives below the variance
    floor are clamped to it for the KL and LRT diagnostics and counted in
    ``clamped_pixels``.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}")
    if attacker not in ATTACKERS:
        raise ValueError(f"unknown attacker {attacker!r}")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    quant = quality_to_quant_table(qf)
    cover, u = extract_side_info(image, quant)
    if estimator == "mipod":
        var = smooth_variance_dct(estimate_variance_mipod(image))
    else:
        var = constant_variance(cover.shape, const_var)
    info, iota = fisher_base(quant, var)
    mask = embedding_mask(cover, u, wet_threshold)
    if attacker == "realistic":
        fisher = fisher_realistic(info, u, mask)
    else:
        fisher = fisher_omniscient(info, iota, u, mask)

    nzac = int(payload_capacity(cover, 1.0)) if alpha > 0 else 0
    cfg = SolverConfig(alpha) if solver_cfg is None else replace(solver_cfg, payload=alpha, payload_unit="bpnzac")
    rates, lam = solve_change_rates(fisher, cfg, nzac=nzac)
    log.info("qf %d alpha %.3f lambda %.6e", qf, alpha, lam)

    result = simulate_embedding(cover, rates, mask, seed, workers, u=u)
    raw = stego_moments(rates, u, quant, var, with_mean=attacker == "omniscient", floor=-np.inf)
    clamped = int(np.count_nonzero(raw.var < VARIANCE_FLOOR))
    moments = PixelMoments(raw.mu, np.maximum(raw.var, VARIANCE_FLOOR))
    _, kl = kl_exact(var, moments)
    delta, rho = lrt_statistics(var, moments, form="derived")
    diag = Diagnostics(
        lam=float(lam),
        kl_nats=kl,
        kl_taylor_nats=kl_taylor(fisher, rates),
        delta=delta,
        rho=rho,
        nzac=nzac,
        target_bits=nzac * float(alpha),
        clamped_pixels=clamped,
        mode_plus=mode_histogram(result.changes, 1),
        mode_minus=mode_histogram(result.changes, -1),
        rates=rates,
        u=u,
        cover=cover,
        variance=var,
    )
    return result, diag
