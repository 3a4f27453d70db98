"""Constant-envelope vs. zero-forcing precoding for the massive-MIMO downlink.

Link-level simulation of a multiuser downlink: CE and ZF precoders,
root-raised-cosine shaping, clipped polynomial PA banks, matched-filter
reception and the BER/SINR/PAPR/MUI metrics compared across power sweeps.
"""

from .config import ExperimentConfig
from .errors import (
    CapacityError,
    CemimoError,
    ConfigurationError,
    DivergenceError,
    FitQualityError,
    InfeasibleError,
    NotCompressiveError,
    NumericalRankError,
)
from .model import MuChannel, PrecodedFrame, SymbolFrame, draw_channel, draw_symbols, qam16_demap, qam16_map
from .precoding import (
    CeOptions,
    CeSolution,
    ZfPrecoder,
    apply_linear,
    ce_alpha_search,
    ce_brute_force,
    ce_gradient,
    ce_objective,
    ce_optimize,
    ce_precode_block,
    zf_weights,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CeOptions",
    "CeSolution",
    "CemimoError",
    "ConfigurationError",
    "DivergenceError",
    "ExperimentConfig",
    "FitQualityError",
    "InfeasibleError",
    "MuChannel",
    "NotCompressiveError",
    "NumericalRankError",
    "PrecodedFrame",
    "SymbolFrame",
    "ZfPrecoder",
    "apply_linear",
    "ce_alpha_search",
    "ce_brute_force",
    "ce_gradient",
    "ce_objective",
    "ce_optimize",
    "ce_precode_block",
    "draw_channel",
    "draw_symbols",
    "qam16_demap",
    "qam16_map",
    "zf_weights",
]
