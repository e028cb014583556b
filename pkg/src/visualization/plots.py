"""
Rendering of dictionaries, activation maps and coefficient statistics.

This module provides functions for:
- Dictionary montages (one cell per element, 1-pixel separators)
- Activation heatmaps of a single element map
- Heat overlays of an element's responses on the input image
- Coefficient bar charts for one patch site
- Histograms of percent-active or usage values, with CSV bin export

Pixel renderings (montage, heatmap, overlay) are computed directly as arrays
and written with the PNG writer of ``src.io``; charts go through matplotlib.
Every output is deterministic: the same inputs give identical PNG bytes.
"""

import logging
import math
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import colormaps
from matplotlib.axes import Axes

from ..config import DEFAULT_DPI, DEFAULT_FIGURE_SIZE, DEFAULT_HIST_BINS, Colormap, RenderConfig
from ..core import ActivationTensor, Dictionary, ImageTensor
from ..io.exporters import export_histogram_bins, write_png

logger = logging.getLogger(__name__)

# Heat colour of overlays, per channel count of the image
HEAT_COLOR = {1: (1.0,), 3: (1.0, 0.0, 0.0)}
DIVERGING_CMAP = "RdBu_r"


class HistogramBins(NamedTuple):
    """Counts and edges of a rendered histogram, plus the axes it was drawn on."""

    counts: np.ndarray
    edges: np.ndarray
    ax: Axes


def configure_plot_style(grid: bool = True, style: str = "default") -> None:
    """
    Configure consistent plot styling for all charts.

    Args:
        grid: Whether to show grid by default (default: True)
        style: Matplotlib style name (default: 'default')

    Example:
        >>> configure_plot_style()
        >>> # Now all subsequent charts will use this style
    """
    try:
        plt.style.use(style)
    except OSError:
        logger.warning("Plot style %r not available, using rcParams fallback", style)
    plt.rcParams["axes.grid"] = grid
    plt.rcParams["grid.alpha"] = 0.3
    plt.rcParams["figure.facecolor"] = "white"
    plt.rcParams["axes.facecolor"] = "white"


def save_figure(
    fig: plt.Figure,
    filepath: Union[str, Path],
    dpi: int = DEFAULT_DPI,
    bbox_inches: Optional[str] = None,
    **kwargs,
) -> None:
    """
    Save figure to file with standard options.

    The software-version metadata chunk is left out so the bytes only depend on
    the figure content.

    Args:
        fig: Matplotlib Figure object to save
        filepath: Path where to save the figure (Path object or string)
        dpi: Resolution in dots per inch (default: 100)
        bbox_inches: Bounding box behavior (default: full figure)
        **kwargs: Additional arguments passed to fig.savefig()

    Example:
        >>> fig, ax = plt.subplots()
        >>> # ... create chart ...
        >>> save_figure(fig, Path("output/hist.png"))
    """
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)

    metadata = kwargs.pop("metadata", {"Software": None})
    fig.savefig(filepath, dpi=dpi, bbox_inches=bbox_inches, metadata=metadata, **kwargs)
    logger.info("Figure saved to %s", filepath)


def _write_if_requested(image: ImageTensor, cfg: RenderConfig) -> ImageTensor:
    if cfg.output_path is not None:
        write_png(image.data, cfg.output_path)
    return image


def _display_channels(block: np.ndarray) -> np.ndarray:
    # Three-channel blocks are shown in colour, anything else as the channel mean
    if block.shape[-1] == 3:
        return block
    return block.mean(axis=-1, keepdims=True)


def _minmax(block: np.ndarray) -> np.ndarray:
    low, high = float(block.min()), float(block.max())
    if high - low <= 0.0:
        return np.full_like(block, 0.5)
    return (block - low) / (high - low)


def _nearest_resize(block: np.ndarray, size: int) -> np.ndarray:
    index = (np.arange(size) * block.shape[0]) // size
    return block[index][:, index]


def montage(dictionary: Dictionary, cfg: Optional[RenderConfig] = None) -> ImageTensor:
    """
    Tile every dictionary element into a square grid.

    The grid has ceil(sqrt(K)) cells per side, filled in row-major element
    order. Each element is min-max normalized on its own (a constant element
    becomes mid-gray) and resized to ``cell_size`` pixels by nearest neighbour.
    Cells are framed by 1-pixel separators, including the outer border; unused
    cells keep the separator value.

    Args:
        dictionary: Dictionary or autoencoder filter bank
        cfg: Render settings; the PNG is written when ``output_path`` is set

    Returns:
        ImageTensor of side ``n * cell_size + n + 1``

    Example:
        >>> montage(init_dictionary(0, 64, 8, 3, 4)).height   # 8 x 8 cells
        73
    """
    cfg = cfg or RenderConfig()
    k_total = dictionary.num_elements
    side = math.ceil(math.sqrt(k_total))
    cell = cfg.cell_size
    pitch = cell + 1
    channels = 3 if dictionary.channels == 3 else 1

    canvas = np.full((side * pitch + 1, side * pitch + 1, channels), float(cfg.separator_value))
    for k in range(k_total):
        row, col = divmod(k, side)
        block = _nearest_resize(_minmax(_display_channels(dictionary.elements[k])), cell)
        top, left = 1 + row * pitch, 1 + col * pitch
        canvas[top : top + cell, left : left + cell] = block

    return _write_if_requested(ImageTensor(canvas), cfg)


def footprint_heat(acts: ActivationTensor, k: int, patch: int, stride: int) -> np.ndarray:
    """
    Spread map ``k`` over its receptive fields at image resolution.

    Each pixel gets the largest |a_k| among the sites whose patch covers it;
    pixels no nonzero site covers stay at 0.
    """
    values = np.abs(acts.element_map(k))
    height = (acts.map_height - 1) * stride + patch
    width = (acts.map_width - 1) * stride + patch
    heat = np.zeros((height, width))
    for r, c in zip(*np.nonzero(values)):
        window = heat[r * stride : r * stride + patch, c * stride : c * stride + patch]
        np.maximum(window, values[r, c], out=window)
    return heat


def overlay(
    image: ImageTensor,
    acts: ActivationTensor,
    k: int,
    patch: int,
    stride: int,
    cfg: Optional[RenderConfig] = None,
) -> ImageTensor:
    """
    Composite the responses of element ``k`` as heat over ``image``.

    The footprint of every nonzero site is blended toward the heat colour with
    weight ``alpha * |a| / max|a|``. Pixels outside all footprints, and every
    pixel when alpha is 0, keep the exact input value.

    Args:
        image: Display image (values in [0, 1], 1 or 3 channels)
        acts: Code of that image
        k: Element index
        patch: Element side in pixels
        stride: Placement stride in pixels
        cfg: Render settings; the PNG is written when ``output_path`` is set

    Raises:
        IndexError: If k is not a valid element index
        ValueError: If the code does not tile the image with this geometry
    """
    cfg = cfg or RenderConfig()
    if not 0 <= k < acts.num_elements:
        raise IndexError(f"element {k} out of range for K={acts.num_elements}")
    if image.channels not in HEAT_COLOR:
        raise ValueError(f"overlay needs a 1 or 3 channel image, got {image.channels}")

    heat = footprint_heat(acts, k, patch, stride)
    if heat.shape != (image.height, image.width):
        raise ValueError(
            f"code of {acts.map_height}x{acts.map_width} sites with patch {patch}, stride "
            f"{stride} covers {heat.shape[0]}x{heat.shape[1]} pixels, image is "
            f"{image.height}x{image.width}"
        )

    result = np.array(image.data)
    peak = heat.max()
    mask = heat > 0
    if peak > 0 and cfg.overlay_alpha > 0:
        weight = (cfg.overlay_alpha * heat[mask] / peak)[:, np.newaxis]
        color = np.asarray(HEAT_COLOR[image.channels])
        result[mask] = result[mask] + weight * (color - result[mask])

    logger.info("Overlay of element %d: %d of %d pixels highlighted", k, mask.sum(), mask.size)
    return _write_if_requested(ImageTensor(result), cfg)


def activation_map(
    acts: ActivationTensor, k: int, cfg: Optional[RenderConfig] = None, scale: int = 1
) -> ImageTensor:
    """
    Render map ``k`` as a heatmap, one block of ``scale`` pixels per site.

    With the grayscale colormap the image is |a| / max|a|; with the
    signed-diverging colormap zero is the neutral midpoint and the scale is
    symmetric around it. An all-zero map renders black (grayscale) or neutral.

    Raises:
        IndexError: If k is not a valid element index
    """
    cfg = cfg or RenderConfig()
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    values = acts.element_map(k)
    peak = float(np.abs(values).max())

    if cfg.colormap is Colormap.SIGNED_DIVERGING:
        centered = 0.5 + 0.5 * values / peak if peak > 0 else np.full_like(values, 0.5)
        pixels = colormaps[DIVERGING_CMAP](centered)[..., :3]
    else:
        magnitude = np.abs(values) / peak if peak > 0 else np.zeros_like(values)
        pixels = magnitude[..., np.newaxis]

    pixels = np.repeat(np.repeat(pixels, scale, axis=0), scale, axis=1)
    return _write_if_requested(ImageTensor(pixels), cfg)


def coeff_chart(
    values: Sequence[float],
    cfg: Optional[RenderConfig] = None,
    omit_zeros: bool = True,
    ax: Optional[Axes] = None,
    title: Optional[str] = None,
) -> Axes:
    """
    Bar chart of the K coefficients at one patch site.

    Args:
        values: One coefficient per element
        cfg: Render settings; the figure is saved when ``output_path`` is set
        omit_zeros: Draw bars for nonzero coefficients only (sparse codes)
        ax: Optional matplotlib axes (creates new if None)
        title: Optional chart title

    Returns:
        matplotlib Axes object with the chart; all-zero input with
        ``omit_zeros`` gives empty axes
    """
    cfg = cfg or RenderConfig()
    values = np.asarray(values, dtype=np.float64).ravel()
    if ax is None:
        fig, ax = plt.subplots(figsize=DEFAULT_FIGURE_SIZE)

    index = np.flatnonzero(values) if omit_zeros else np.arange(values.size)
    ax.bar(index, values[index], width=0.8, color="tab:blue", edgecolor="black", linewidth=0.5)
    ax.axhline(y=0, color="black", linewidth=1)
    ax.set_xlim(-1, max(values.size, 1))
    ax.set_xlabel("Element", fontsize=11)
    ax.set_ylabel("Coefficient", fontsize=11)
    ax.set_title(
        title or f"Coefficients ({np.count_nonzero(values)} of {values.size} nonzero)",
        fontsize=13,
        fontweight="bold",
    )
    ax.grid(True, axis="y", alpha=0.3)

    if cfg.output_path is not None:
        save_figure(ax.figure, cfg.output_path)
    return ax


def histogram(
    values: Sequence[float],
    bins: int = DEFAULT_HIST_BINS,
    cfg: Optional[RenderConfig] = None,
    csv_path: Optional[Union[str, Path]] = None,
    value_range: Optional[tuple] = None,
    ax: Optional[Axes] = None,
    xlabel: str = "Value",
) -> HistogramBins:
    """
    Histogram of ``values`` rendered as bars, with the bins optionally saved as CSV.

    Args:
        values: Samples (e.g. percent active per image, usage per element)
        bins: Number of equal-width bins (>= 1)
        cfg: Render settings; the figure is saved when ``output_path`` is set
        csv_path: Where to write ``bin_left,bin_right,count`` rows (None = skip)
        value_range: Optional (low, high) of the bins; defaults to the data range
        ax: Optional matplotlib axes (creates new if None)
        xlabel: Label of the value axis

    Returns:
        HistogramBins with counts summing to the number of samples

    Raises:
        ValueError: On empty input or fewer than one bin
    """
    cfg = cfg or RenderConfig()
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("histogram of an empty sequence")
    if bins < 1:
        raise ValueError(f"bins must be at least 1, got {bins}")

    counts, edges = np.histogram(values, bins=bins, range=value_range)
    if ax is None:
        fig, ax = plt.subplots(figsize=DEFAULT_FIGURE_SIZE)
    ax.bar(
        edges[:-1],
        counts,
        width=np.diff(edges),
        align="edge",
        color="tab:blue",
        edgecolor="black",
        linewidth=0.5,
    )
    ax.set_xlabel(xlabel, fontsize=11)
    ax.set_ylabel("Count", fontsize=11)
    ax.set_title(f"Histogram of {values.size} values", fontsize=13, fontweight="bold")
    ax.grid(True, axis="y", alpha=0.3)

    if cfg.output_path is not None:
        save_figure(ax.figure, cfg.output_path)
    if csv_path is not None:
        export_histogram_bins(edges, counts, csv_path)
    return HistogramBins(counts, edges, ax)
