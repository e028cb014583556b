"""
Configuration module for the sparse coding toolkit.

This module provides default settings and the configuration dataclasses shared
by the solver, the trainers, the renderers and the command-line interface.
"""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

# Desk-scale geometry (full scale is 128x128, patch 16, stride 4, K 128)
DEFAULT_IMAGE_SIZE = 64  # pixels, square
DEFAULT_PATCH = 8  # pixels
DEFAULT_STRIDE = 4  # pixels
DEFAULT_NUM_ELEMENTS = 64
DEFAULT_CHANNELS = 3

# LCA solver defaults
DEFAULT_LAMBDA = 0.4
DEFAULT_STEP_SIZE = 0.05  # fraction of the leak time constant
DEFAULT_MAX_STEPS = 600
DEFAULT_TOLERANCE = 1e-6  # mean |du| per step
DEFAULT_JITTER = 1e-9
DIVERGENCE_LIMIT = 1e6

# Dictionary learning defaults
DEFAULT_DICT_LEARNING_RATE = 0.01
DEFAULT_BATCH_SIZE = 8
DEFAULT_EPOCHS = 20

# Denoising autoencoder defaults
DEFAULT_NOISE_SIGMA = 0.5
DEFAULT_AE_LEARNING_RATE = 2.0  # per-pixel scaled, see ae_train_epoch
DEFAULT_AE_EPOCHS = 50
DEFAULT_AE_INIT_SCALE = 0.1
AE_INSTABILITY_MSE = 1e4

# Tolerance settings
UNIT_NORM_TOLERANCE = 1e-9
DUPLICATE_GRAM_TOLERANCE = 1e-12
AE_ACTIVE_EPSILON = 1e-12

# Rendering defaults
DEFAULT_CELL_SIZE = 8  # pixels per dictionary element in montages
DEFAULT_OVERLAY_ALPHA = 0.6
DEFAULT_HIST_BINS = 20
DEFAULT_FIGURE_SIZE = (8, 4)
DEFAULT_DPI = 100

# Synthetic corpus defaults
DEFAULT_CORPUS_COUNT = 200
DEFAULT_SEED = 0


class ThresholdMode(str, Enum):
    """Shrinkage applied to membrane potentials."""

    SIGNED_SOFT = "signed_soft"
    NONNEG_SOFT = "nonneg_soft"


class Colormap(str, Enum):
    """Display mapping for single-channel renderings."""

    GRAYSCALE = "grayscale"
    SIGNED_DIVERGING = "signed-diverging"


class ModelKind(IntEnum):
    """What a model or LCAD file holds; values are the kind byte of the file header."""

    SPARSE_CODING = 0
    AUTOENCODER = 1
    ACTIVATIONS = 2


@dataclass(frozen=True)
class Geometry:
    """
    Convolutional geometry shared by both models.

    Attributes:
        image_height: Input height in pixels
        image_width: Input width in pixels
        channels: Input channels
        patch: Element side in pixels
        stride: Placement stride in pixels
        num_elements: Number of dictionary elements / filters (K)
    """

    image_height: int = DEFAULT_IMAGE_SIZE
    image_width: int = DEFAULT_IMAGE_SIZE
    channels: int = DEFAULT_CHANNELS
    patch: int = DEFAULT_PATCH
    stride: int = DEFAULT_STRIDE
    num_elements: int = DEFAULT_NUM_ELEMENTS

    def __post_init__(self):
        for name in ("image_height", "image_width", "channels", "patch", "stride", "num_elements"):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for axis, size in (("height", self.image_height), ("width", self.image_width)):
            if size < self.patch or (size - self.patch) % self.stride != 0:
                raise ValueError(
                    f"stride {self.stride} must divide image {axis} {size} minus patch {self.patch}"
                )

    @property
    def map_height(self) -> int:
        return (self.image_height - self.patch) // self.stride + 1

    @property
    def map_width(self) -> int:
        return (self.image_width - self.patch) // self.stride + 1


@dataclass(frozen=True)
class LcaConfig:
    """
    Settings for the LCA integrator.

    Attributes:
        lam: Sparsity threshold (lambda >= 0)
        step_size: Euler step eta in (0, 1]
        max_steps: Step budget per solve
        tolerance: Stop once mean |du| falls below this value
        threshold_mode: Signed or nonnegative soft threshold
        seed: Seed of the initial potential jitter
        jitter: Amplitude of the initial potential jitter
        merge_duplicates: Merge coefficients of identical elements after the solve
    """

    lam: float = DEFAULT_LAMBDA
    step_size: float = DEFAULT_STEP_SIZE
    max_steps: int = DEFAULT_MAX_STEPS
    tolerance: float = DEFAULT_TOLERANCE
    threshold_mode: ThresholdMode = ThresholdMode.SIGNED_SOFT
    seed: int = DEFAULT_SEED
    jitter: float = DEFAULT_JITTER
    merge_duplicates: bool = True

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if not 0 < self.step_size <= 1:
            raise ValueError(f"step_size must be in (0, 1], got {self.step_size}")
        if self.max_steps <= 0:
            raise ValueError(f"max_steps must be positive, got {self.max_steps}")
        if not self.tolerance >= 0:
            raise ValueError(f"tolerance must be nonnegative, got {self.tolerance}")
        if not self.jitter >= 0:
            raise ValueError(f"jitter must be nonnegative, got {self.jitter}")
        object.__setattr__(self, "threshold_mode", ThresholdMode(self.threshold_mode))


@dataclass(frozen=True)
class TrainConfig:
    """
    Settings for alternating LCA inference and dictionary updates.

    A learning rate of 0 freezes the dictionary (evaluation epochs).
    """

    lca: LcaConfig = field(default_factory=LcaConfig)
    dict_learning_rate: float = DEFAULT_DICT_LEARNING_RATE
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = DEFAULT_SEED
    normalize_every_update: bool = True
    resample_dead_elements: bool = True
    threads: Optional[int] = None

    def __post_init__(self):
        if not self.dict_learning_rate >= 0:
            raise ValueError(
                f"dict_learning_rate must be nonnegative, got {self.dict_learning_rate}"
            )
        if self.epochs < 0:
            raise ValueError(f"epochs must be nonnegative, got {self.epochs}")
        if self.batch_size <= 0:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if self.seed < 0:
            raise ValueError(f"seed must be unsigned, got {self.seed}")


@dataclass(frozen=True)
class AeTrainConfig:
    """Settings for denoising autoencoder training with plain SGD."""

    noise_sigma: float = DEFAULT_NOISE_SIGMA
    learning_rate: float = DEFAULT_AE_LEARNING_RATE
    epochs: int = DEFAULT_AE_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = DEFAULT_SEED
    resample_noise: bool = True

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise ValueError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be nonnegative, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be nonnegative, got {self.epochs}")
        if self.batch_size <= 0:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if self.seed < 0:
            raise ValueError(f"seed must be unsigned, got {self.seed}")


@dataclass(frozen=True)
class RenderConfig:
    """
    Settings for the figure renderers.

    Attributes:
        cell_size: Pixels per dictionary element side in montages
        colormap: Display mapping for single-channel data
        overlay_alpha: Heat opacity in [0, 1]
        output_path: Where the PNG goes (None = do not write)
        separator_value: Gray level of montage separators
    """

    cell_size: int = DEFAULT_CELL_SIZE
    colormap: Colormap = Colormap.GRAYSCALE
    overlay_alpha: float = DEFAULT_OVERLAY_ALPHA
    output_path: Optional[Path] = None
    separator_value: float = 0.0

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if not 0.0 <= self.overlay_alpha <= 1.0:
            raise ValueError(f"overlay_alpha must be in [0, 1], got {self.overlay_alpha}")
        object.__setattr__(self, "colormap", Colormap(self.colormap))
        if self.output_path is not None:
            object.__setattr__(self, "output_path", Path(self.output_path))


def load_config_overlay(
    filepath: Union[str, Path], allowed_keys: Iterable[str]
) -> Dict[str, str]:
    """
    Read a line-oriented ``key = value`` overlay file.

    Keys may use dashes or underscores; they are returned with underscores.
    Blank lines and ``#`` comments are ignored.

    Args:
        filepath: Overlay file
        allowed_keys: Accepted keys (underscore form)

    Returns:
        Mapping of key to raw string value

    Raises:
        FileNotFoundError: If the file doesn't exist
        ValueError: On malformed lines or unknown keys

    Example:
        >>> load_config_overlay("run.cfg", ["lam", "epochs"])
        {'lam': '0.2', 'epochs': '5'}
    """
    filepath = Path(filepath)
    if not filepath.exists():
        raise FileNotFoundError(f"Config file not found: {filepath}")

    allowed = set(allowed_keys)
    values: Dict[str, str] = {}
    errors = []
    for line_no, raw in enumerate(filepath.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {line_no}: expected 'key = value', got '{raw.strip()}'")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in allowed:
            errors.append(f"line {line_no}: unknown key '{key}'")
            continue
        values[key] = value

    if errors:
        raise ValueError(
            f"Invalid config file {filepath}:\n"
            + "\n".join(f"  - {err}" for err in errors)
            + f"\nAccepted keys: {', '.join(sorted(allowed))}"
        )
    return values


def coerce_value(raw: str, like: Any) -> Any:
    """Convert an overlay string to the type of ``like``."""
    if isinstance(like, bool):
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got '{raw}'")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw
