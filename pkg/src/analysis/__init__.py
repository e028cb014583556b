"""
Analysis module for interpretability metrics.

This module contains functions for:
- Sparsity (percent active) and element usage frequency
- Intra- and inter-image activation cross-correlation
- Metrics reports comparing sparse coding and autoencoder codes
- Element matching between two models
"""

from .metrics import (
    MetricsError,
    ModelKind,
    CrossCorrStats,
    MetricsReport,
    percent_active,
    usage_frequency,
    intra_image_crosscorr,
    corpus_crosscorr,
    build_report,
    match_elements,
    response_similarity,
    top_responses,
)

__all__ = [
    "MetricsError",
    "ModelKind",
    "CrossCorrStats",
    "MetricsReport",
    "percent_active",
    "usage_frequency",
    "intra_image_crosscorr",
    "corpus_crosscorr",
    "build_report",
    "match_elements",
    "response_similarity",
    "top_responses",
]
