"""
Deterministic synthetic information graphics.

Each graphic is a small line or bar chart on a white background: black axes,
light gridlines, one to four colored series, legend swatches and dark blocks
standing in for text. Everything is drawn with numpy into an RGB array in
[0, 1], so a spec and an output size fully determine the pixels.

Style flags (string of letters, or "-" for none):
    a   axes
    l   legend swatches
    g   gridlines
    t   text blocks (title and axis labels)
    b   bars instead of polylines
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..config import DEFAULT_IMAGE_SIZE
from ..core import ImageTensor

Color = Tuple[float, float, float]

STYLE_FLAGS = "algtb"
DEFAULT_FLAGS = "aglt"

# Saturated series colors
DEFAULT_PALETTE: Tuple[Color, ...] = (
    (0.85, 0.10, 0.10),  # red
    (0.10, 0.30, 0.85),  # blue
    (0.10, 0.65, 0.20),  # green
    (0.95, 0.55, 0.05),  # orange
    (0.55, 0.15, 0.70),  # purple
)

BACKGROUND = 1.0
INK = 0.0
GRID = 0.85
TEXT = 0.15


@dataclass(frozen=True)
class SynthSpec:
    """
    Recipe for one synthetic graphic.

    Attributes:
        seed: Seed of every random choice in the drawing
        num_series: Number of plotted series (1-4)
        flags: Style letters from "algtb", or "-" for a bare plot
        palette: Series colors, cycled if shorter than num_series
    """

    seed: int
    num_series: int = 1
    flags: str = DEFAULT_FLAGS
    palette: Tuple[Color, ...] = DEFAULT_PALETTE

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError(f"seed must be unsigned, got {self.seed}")
        if not 1 <= self.num_series <= 4:
            raise ValueError(f"num_series must be 1-4, got {self.num_series}")
        flags = "" if self.flags == "-" else self.flags
        unknown = sorted(set(flags) - set(STYLE_FLAGS))
        if unknown:
            raise ValueError(f"unknown style flags {unknown}; expected letters of '{STYLE_FLAGS}'")
        if not self.palette:
            raise ValueError("palette must not be empty")
        object.__setattr__(self, "flags", "".join(c for c in STYLE_FLAGS if c in flags) or "-")

    def has(self, flag: str) -> bool:
        return flag in self.flags

    def to_token(self) -> str:
        """Manifest form ``synth:<seed>:<num_series>:<flags>``."""
        return f"synth:{self.seed}:{self.num_series}:{self.flags}"


def random_spec(seed: int, index: int) -> SynthSpec:
    """
    Spec number ``index`` of a corpus seeded with ``seed``.

    Series count and style flags vary per image; the same (seed, index) always
    gives the same spec.
    """
    rng = np.random.default_rng([seed, index])
    num_series = int(rng.integers(1, 5))
    draws = rng.uniform(size=5)
    chance = {"a": 0.8, "l": 0.5, "g": 0.5, "t": 0.6, "b": 0.3}
    flags = "".join(flag for flag, u in zip(STYLE_FLAGS, draws) if u < chance[flag])
    return SynthSpec(seed=int(rng.integers(0, 2**31)), num_series=num_series, flags=flags or "-")


def _draw_segment(canvas: np.ndarray, r0: float, c0: float, r1: float, c1: float, color) -> None:
    steps = int(2 * max(abs(r1 - r0), abs(c1 - c0))) + 2
    t = np.linspace(0.0, 1.0, steps)
    rows = np.rint(r0 + t * (r1 - r0)).astype(int)
    cols = np.rint(c0 + t * (c1 - c0)).astype(int)
    height, width = canvas.shape[:2]
    keep = (rows >= 0) & (rows < height) & (cols >= 0) & (cols < width)
    canvas[rows[keep], cols[keep]] = color


def _fill(canvas: np.ndarray, top: int, left: int, bottom: int, right: int, color) -> None:
    """Fill rows [top, bottom) and columns [left, right), clipped to the canvas."""
    height, width = canvas.shape[:2]
    top, bottom = max(top, 0), min(bottom, height)
    left, right = max(left, 0), min(right, width)
    if top < bottom and left < right:
        canvas[top:bottom, left:right] = color


def synth_graphic(
    spec: SynthSpec, height: int = DEFAULT_IMAGE_SIZE, width: int = DEFAULT_IMAGE_SIZE
) -> ImageTensor:
    """
    Render ``spec`` as a height x width x 3 image in [0, 1].

    Example:
        >>> image = synth_graphic(SynthSpec(seed=7, num_series=2, flags="aglt"))
        >>> image.shape
        (64, 64, 3)
    """
    if height < 16 or width < 16:
        raise ValueError(f"synthetic graphics need at least 16x16 pixels, got {height}x{width}")
    rng = np.random.default_rng(spec.seed)
    canvas = np.full((height, width, 3), BACKGROUND)

    # Plot area
    top = max(2, round(0.10 * height))
    bottom = height - max(3, round(0.14 * height))
    left = max(3, round(0.14 * width))
    right = width - max(2, round(0.06 * width))
    plot_h = bottom - top
    plot_w = right - left

    if spec.has("g"):
        for level in (0.25, 0.5, 0.75):
            row = bottom - round(level * plot_h)
            _fill(canvas, row, left, row + 1, right, (GRID,) * 3)

    colors = [spec.palette[s % len(spec.palette)] for s in range(spec.num_series)]
    if spec.has("b"):
        slots = int(rng.integers(3, 7))
        slot_w = plot_w / slots
        bar_w = max(1, int(slot_w / 2) // spec.num_series)
        for slot in range(slots):
            start = left + int(slot * slot_w + slot_w / 4)
            for s, color in enumerate(colors):
                bar_h = round(rng.uniform(0.1, 0.8) * plot_h)
                x0 = start + s * bar_w
                _fill(canvas, bottom - bar_h, x0, bottom, x0 + bar_w, color)
    else:
        points = int(rng.integers(4, 9))
        cols = np.linspace(left + 1, right - 1, points)
        for color in colors:
            rows = bottom - 1 - rng.uniform(0.1, 0.9, size=points) * (plot_h - 2)
            for i in range(points - 1):
                _draw_segment(canvas, rows[i], cols[i], rows[i + 1], cols[i + 1], color)

    if spec.has("a"):
        _fill(canvas, top, left - 1, bottom + 1, left, (INK,) * 3)
        _fill(canvas, bottom, left - 1, bottom + 1, right, (INK,) * 3)

    if spec.has("l"):
        swatch = max(2, height // 24)
        label_w = 3 * swatch
        x0 = right - label_w - swatch - 2
        for s, color in enumerate(colors):
            y0 = top + 1 + s * (swatch + 1)
            _fill(canvas, y0, x0, y0 + swatch, x0 + swatch, color)
            mid = y0 + swatch // 2
            _fill(canvas, mid, x0 + swatch + 1, mid + 1, x0 + swatch + 1 + label_w, (TEXT,) * 3)

    if spec.has("t"):
        line = max(1, height // 32)
        title_w = round(rng.uniform(0.3, 0.6) * plot_w)
        title_x = left + (plot_w - title_w) // 2
        title_y = top // 2 - line // 2
        _fill(canvas, title_y, title_x, title_y + line, title_x + title_w, (TEXT,) * 3)
        label_w = round(rng.uniform(0.2, 0.4) * plot_w)
        label_y = bottom + (height - bottom) // 2
        label_x = left + (plot_w - label_w) // 2
        _fill(canvas, label_y, label_x, label_y + line, label_x + label_w, (TEXT,) * 3)
        label_h = round(rng.uniform(0.2, 0.4) * plot_h)
        label_y = top + (plot_h - label_h) // 2
        _fill(canvas, label_y, left // 2 - 1, label_y + label_h, left // 2 - 1 + line, (TEXT,) * 3)

    return ImageTensor(canvas)
