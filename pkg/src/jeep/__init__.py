"""Side-informed JPEG embedding that preserves the pixel-domain error model."""

__version__ = "0.1.0"

from .analysis import (
    detection_probability,
    kl_exact,
    kl_taylor,
    kl_taylor_block,
    lrt_moments,
    lrt_statistics,
    normalized_statistic,
    residual,
    sanov_bound,
)
from .controlled_source import noisify, synthetic_flat_source
from .embedder import EmbeddingResult, embed_pipeline, simulate_embedding
from .fisher import FisherField, fisher_base, fisher_omniscient, fisher_realistic
from .jpeg import (
    QuantizedImage,
    QuantTable,
    compress,
    dct_basis,
    dct_forward,
    dct_inverse,
    decompress,
    quality_to_quant_table,
    variance_to_dct,
    variance_to_spatial,
)
from .side_info import WetMask, extract_side_info, rational_mode_mask, saturation_mask
from .solver import (
    SolverConfig,
    costs_to_rates,
    payload_capacity,
    rates_to_costs,
    solve_change_rates,
    ternary_entropy,
)
from .stego_model import ChangeRates, PixelMoments, covariance_eta_u, eta_moments, lemma1_holds, stego_moments
from .variance import constant_variance, estimate_variance_mipod, smooth_variance_dct

__all__ = [
    "ChangeRates",
    "compress",
    "constant_variance",
    "costs_to_rates",
    "covariance_eta_u",
    "dct_basis",
    "dct_forward",
    "dct_inverse",
    "decompress",
    "detection_probability",
    "embed_pipeline",
    "EmbeddingResult",
    "estimate_variance_mipod",
    "eta_moments",
    "extract_side_info",
    "fisher_base",
    "fisher_omniscient",
    "fisher_realistic",
    "FisherField",
    "kl_exact",
    "kl_taylor",
    "kl_taylor_block",
    "lemma1_holds",
    "lrt_moments",
    "lrt_statistics",
    "noisify",
    "normalized_statistic",
    "payload_capacity",
    "PixelMoments",
    "quality_to_quant_table",
    "QuantizedImage",
    "QuantTable",
    "rates_to_costs",
    "rational_mode_mask",
    "residual",
    "sanov_bound",
    "saturation_mask",
    "simulate_embedding",
    "smooth_variance_dct",
    "solve_change_rates",
    "SolverConfig",
    "stego_moments",
    "synthetic_flat_source",
    "ternary_entropy",
    "variance_to_dct",
    "variance_to_spatial",
    "WetMask",
]
