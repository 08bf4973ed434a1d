"""Filter decoding by activation maximization."""

from .activation_maximization import (
    AmConfig,
    AmResult,
    activation_maximization,
    decode_filters,
    dominant_frequency,
    lp_norm,
    total_variation,
    tv_denoise,
)
from .export import export_results, plot_pattern_svg, save_pattern_csv, write_am_summary

__all__ = [
    "AmConfig",
    "AmResult",
    "activation_maximization",
    "decode_filters",
    "dominant_frequency",
    "export_results",
    "lp_norm",
    "plot_pattern_svg",
    "save_pattern_csv",
    "total_variation",
    "tv_denoise",
    "write_am_summary",
]
