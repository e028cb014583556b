"""
Visualization module for rendering models and codes.

This module contains functions for:
- Dictionary montages
- Activation heatmaps and overlays
- Coefficient bar charts
- Histograms with CSV bin export
"""

from .plots import (
    HistogramBins,
    configure_plot_style,
    save_figure,
    montage,
    footprint_heat,
    overlay,
    activation_map,
    coeff_chart,
    histogram,
)

__all__ = [
    "HistogramBins",
    "configure_plot_style",
    "save_figure",
    "montage",
    "footprint_heat",
    "overlay",
    "activation_map",
    "coeff_chart",
    "histogram",
]
