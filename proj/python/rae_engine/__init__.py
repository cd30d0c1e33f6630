"""Aim-weight calibration and policy engine for conversational recommenders."""

from ._core import (
    RaeError,
    analyze,
    benjamini_hochberg,
    bonferroni,
    calibrate,
    category_probs,
    chi_square_sf,
    decide,
    effect_size_r,
    evaluate_policy,
    hdi,
    kruskal_wallis,
    mann_whitney_u,
    mid_ranks,
    published_priors,
    render_text,
    sha256_hex,
    simulate_csv,
    spearman,
    wilcoxon_one_sample,
    wilcoxon_signed_rank,
)

__all__ = [
    "RaeError",
    "analyze",
    "benjamini_hochberg",
    "bonferroni",
    "calibrate",
    "category_probs",
    "chi_square_sf",
    "decide",
    "effect_size_r",
    "evaluate_policy",
    "hdi",
    "kruskal_wallis",
    "mann_whitney_u",
    "mid_ranks",
    "published_priors",
    "render_text",
    "sha256_hex",
    "simulate_csv",
    "spearman",
    "wilcoxon_one_sample",
    "wilcoxon_signed_rank",
]
