"""
Dictionary learning by alternating LCA inference and Hebbian updates.

Each batch is first encoded with the dictionary held fixed; the activations are
then treated as constants and the dictionary takes a gradient step on the
reconstruction term of the sparse coding objective:

    -dE/dPhi_k = sum over sites (r, c) of a[r, c, k] * (x - Phi a) patch at (r, c)

The update is local and Hebbian: the product of a unit's activity with the
residual it sees. After the step every element is projected back onto the unit
sphere, so lambda keeps a fixed meaning throughout training.

Elements that never fire during an epoch are re-drawn from seeded noise at the
end of the epoch.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..config import Geometry, TrainConfig
from ..core import (
    ActivationTensor,
    Dictionary,
    DictionaryShape,
    DimensionMismatchError,
    ImageTensor,
    conv_transpose,
    hebbian_product,
    normalize_elements,
)
from .lca import LcaDivergenceError, check_step_size, encode_batch

logger = logging.getLogger(__name__)


class TrainingDivergenceError(RuntimeError):
    """Exception raised when the solver diverges inside a training batch."""

    def __init__(self, batch_index: int, epoch: int, cause: Exception):
        super().__init__(f"epoch {epoch}, batch {batch_index}: {cause}")
        self.batch_index = batch_index
        self.epoch = epoch


@dataclass(frozen=True)
class EpochStats:
    """
    Summary of one training epoch.

    Attributes:
        epoch: 1-based epoch number
        mse: Mean per-pixel reconstruction error over the corpus
        energy: Mean objective value per image
        percent_active: Mean fraction of nonzero coefficients per image
        dict_delta: Frobenius norm of the parameter change over the epoch
    """

    epoch: int
    mse: float
    energy: float
    percent_active: float
    dict_delta: float

    def __post_init__(self):
        for name in ("mse", "energy", "percent_active", "dict_delta"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")

    def format_line(self) -> str:
        """Stable one-line summary used on standard output."""
        return (
            f"epoch={self.epoch}, mse={self.mse:.6f}, energy={self.energy:.6f}, "
            f"active={self.percent_active:.6f}"
        )


@dataclass
class TrainStats:
    """Per-epoch statistics of a training run."""

    rows: List[EpochStats] = field(default_factory=list)

    def append(self, row: EpochStats) -> None:
        self.rows.append(row)

    @property
    def epochs_completed(self) -> int:
        return len(self.rows)

    @property
    def mse(self) -> np.ndarray:
        return np.array([row.mse for row in self.rows])

    @property
    def energy(self) -> np.ndarray:
        return np.array([row.energy for row in self.rows])

    @property
    def percent_active(self) -> np.ndarray:
        return np.array([row.percent_active for row in self.rows])

    @property
    def dict_delta(self) -> np.ndarray:
        return np.array([row.dict_delta for row in self.rows])

    def __len__(self) -> int:
        return len(self.rows)


def init_dictionary(seed: int, K: int, patch: int, channels: int, stride: int) -> Dictionary:
    """
    Random dictionary: uniform noise centred at 0, each element scaled to unit norm.

    Deterministic given ``seed``.

    Example:
        >>> phi = init_dictionary(0, K=128, patch=16, channels=3, stride=4)
        >>> phi.elements.shape
        (128, 16, 16, 3)
    """
    for name, value in (("K", K), ("patch", patch), ("channels", channels), ("stride", stride)):
        if value <= 0:
            raise ValueError(f"{name} must be positive, got {value}")
    rng = np.random.default_rng(seed)
    elements = rng.uniform(-0.5, 0.5, size=(K, patch, patch, channels))
    return Dictionary(normalize_elements(elements), stride)


def dict_gradient(
    image: ImageTensor,
    recon: ImageTensor,
    acts: ActivationTensor,
    dict_shape: DictionaryShape,
) -> np.ndarray:
    """
    Hebbian update blocks (minus the gradient of the reconstruction term).

    update[k] = sum over sites of acts[r, c, k] * residual patch at (r*stride, c*stride),
    with residual = image - recon.

    Args:
        image: Input image x
        recon: conv_transpose(acts, dictionary)
        acts: Code a (held constant)
        dict_shape: Shape of the dictionary being updated

    Returns:
        Array of shape (K, patch, patch, channels)

    Raises:
        DimensionMismatchError: If the shapes are inconsistent
    """
    if image.shape != recon.shape:
        raise DimensionMismatchError(
            f"image {image.shape} and reconstruction {recon.shape} differ"
        )
    if acts.num_elements != dict_shape.num_elements or image.channels != dict_shape.channels:
        raise DimensionMismatchError(
            f"code {acts.shape} / image {image.shape} do not match {dict_shape}"
        )
    residual = ImageTensor(image.data - recon.data)
    return hebbian_product(residual, acts, dict_shape.patch, dict_shape.stride)


def _reconstruction_loss(
    image: ImageTensor, dictionary: Dictionary, acts: ActivationTensor
) -> float:
    recon = conv_transpose(acts, dictionary, image.height, image.width)
    residual = image.data - recon.data
    return 0.5 * float(np.sum(residual * residual))


def finite_difference_check(
    image: ImageTensor,
    dictionary: Dictionary,
    acts: ActivationTensor,
    epsilon: float = 1e-5,
) -> float:
    """
    Compare dict_gradient with centred finite differences.

    The reconstruction term 1/2 ||x - Phi a||^2 is differentiated numerically with
    respect to every dictionary entry, with the activations fixed.

    Returns:
        max |analytic - numeric| / max(max |analytic|, max |numeric|); 0 when both
        gradients vanish

    Raises:
        ValueError: If the dictionary has more than 500 parameters
    """
    if dictionary.elements.size > 500:
        raise ValueError(
            f"finite differences need <= 500 dictionary parameters, got {dictionary.elements.size}"
        )
    recon = conv_transpose(acts, dictionary, image.height, image.width)
    analytic = -dict_gradient(image, recon, acts, dictionary.shape)

    numeric = np.zeros_like(dictionary.elements)
    base = dictionary.elements
    for index in np.ndindex(base.shape):
        plus = base.copy()
        minus = base.copy()
        plus[index] += epsilon
        minus[index] -= epsilon
        f_plus = _reconstruction_loss(image, dictionary.with_elements(plus), acts)
        f_minus = _reconstruction_loss(image, dictionary.with_elements(minus), acts)
        numeric[index] = (f_plus - f_minus) / (2.0 * epsilon)

    return relative_error(analytic, numeric)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Normwise relative error max|a - n| / max(max|a|, max|n|)."""
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric))) / scale


def _batches(order: np.ndarray, batch_size: int) -> List[np.ndarray]:
    return [order[i : i + batch_size] for i in range(0, len(order), batch_size)]


def train_epoch(
    corpus: Sequence[ImageTensor],
    dictionary: Dictionary,
    cfg: TrainConfig,
    epoch: int = 1,
) -> Tuple[Dictionary, EpochStats]:
    """
    One pass over the corpus.

    For every batch: encode each image with the dictionary fixed, average the
    Hebbian updates over the batch, take a step of size ``dict_learning_rate`` and
    renormalize the elements. Statistics are measured on the codes of each batch,
    before its update.

    Args:
        corpus: Training images
        dictionary: Current dictionary
        cfg: Training settings
        epoch: 1-based epoch number (seeds the batch order and dead-element resets)

    Returns:
        Tuple of (updated dictionary, epoch statistics)

    Raises:
        ValueError: If the corpus is empty
        TrainingDivergenceError: If the solver diverges; carries the batch index
    """
    if len(corpus) == 0:
        raise ValueError("corpus must not be empty")

    learning = cfg.dict_learning_rate > 0
    start = dictionary
    rng = np.random.default_rng([cfg.seed, epoch])
    order = rng.permutation(len(corpus))
    usage = np.zeros(dictionary.num_elements, dtype=np.int64)
    mse_sum = energy_sum = active_sum = 0.0

    for batch_index, batch in enumerate(_batches(order, cfg.batch_size)):
        images = [corpus[i] for i in batch]
        try:
            states = encode_batch(images, dictionary, cfg.lca, threads=cfg.threads)
        except LcaDivergenceError as exc:
            raise TrainingDivergenceError(batch_index, epoch, exc) from exc

        update = np.zeros_like(dictionary.elements)
        for image, state in zip(images, states):
            residual = image.data - state.recon.data
            mse_sum += float(np.mean(residual * residual))
            energy_sum += state.final_energy
            active_sum += float(np.count_nonzero(state.a.data)) / state.a.data.size
            usage += np.count_nonzero(state.a.data, axis=(0, 1))
            if learning:
                update += dict_gradient(image, state.recon, state.a, dictionary.shape)

        if learning:
            elements = dictionary.elements + cfg.dict_learning_rate * update / len(images)
            if cfg.normalize_every_update:
                elements = normalize_elements(elements)
            dictionary = dictionary.with_elements(elements)

    if learning and cfg.resample_dead_elements:
        dictionary = resample_dead_elements(dictionary, usage, seed=cfg.seed, epoch=epoch)

    n = len(corpus)
    stats = EpochStats(
        epoch=epoch,
        mse=mse_sum / n,
        energy=energy_sum / n,
        percent_active=active_sum / n,
        dict_delta=float(np.linalg.norm(dictionary.elements - start.elements)),
    )
    logger.info(stats.format_line())
    return dictionary, stats


def resample_dead_elements(
    dictionary: Dictionary, usage: np.ndarray, seed: int, epoch: int
) -> Dictionary:
    """Re-draw every element with zero usage from seeded unit-norm noise."""
    dead = np.flatnonzero(np.asarray(usage) == 0)
    if dead.size == 0:
        return dictionary
    logger.warning("Re-initializing %d unused elements: %s", dead.size, dead.tolist())
    rng = np.random.default_rng([seed, epoch, 1])
    elements = dictionary.elements.copy()
    noise = rng.uniform(-0.5, 0.5, size=(dead.size,) + elements.shape[1:])
    elements[dead] = normalize_elements(noise)
    return dictionary.with_elements(elements)


def train_dictionary(
    corpus: Sequence[ImageTensor],
    cfg: TrainConfig,
    dictionary: Optional[Dictionary] = None,
    on_epoch: Optional[Callable[[EpochStats], None]] = None,
    geometry: Optional[Geometry] = None,
) -> Tuple[Dictionary, TrainStats]:
    """
    Run ``cfg.epochs`` training epochs starting from ``dictionary``.

    Args:
        corpus: Training images
        cfg: Training settings
        dictionary: Starting dictionary; if None one is drawn with
            :func:`init_dictionary` from ``cfg.seed`` and ``geometry``
        geometry: Element count, patch and stride for a fresh dictionary
            (defaults, with the channel count of the corpus)
        on_epoch: Optional callback receiving every EpochStats row

    Returns:
        Tuple of (trained dictionary, TrainStats)
    """
    if dictionary is None:
        if geometry is None:
            if len(corpus) == 0:
                raise ValueError("corpus must not be empty")
            geometry = Geometry(
                image_height=corpus[0].height,
                image_width=corpus[0].width,
                channels=corpus[0].channels,
            )
        dictionary = init_dictionary(
            cfg.seed, geometry.num_elements, geometry.patch, geometry.channels, geometry.stride
        )

    stats = TrainStats()
    if cfg.epochs > 0 and len(corpus) > 0:
        check_step_size(dictionary, corpus[0].height, corpus[0].width, cfg.lca)
    for epoch in range(1, cfg.epochs + 1):
        dictionary, row = train_epoch(corpus, dictionary, cfg, epoch=epoch)
        stats.append(row)
        if on_epoch is not None:
            on_epoch(row)
    return dictionary, stats
