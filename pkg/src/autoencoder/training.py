"""
Stochastic gradient descent for the denoising autoencoder.

Every presentation of an image draws fresh Gaussian noise (unless
``resample_noise`` is off), runs the forward and backward passes and accumulates
gradients over the batch. The step uses the batch-mean gradient divided by the
pixel count of one image, i.e. the gradient of the per-pixel MSE.
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ..config import AE_INSTABILITY_MSE, AeTrainConfig, Geometry
from ..core import ImageTensor
from ..sparse_coding.trainer import EpochStats, TrainStats
from .model import (
    AutoencoderModel,
    add_gaussian_noise,
    ae_backward,
    ae_forward,
    init_autoencoder,
)

logger = logging.getLogger(__name__)


class AeInstabilityError(RuntimeError):
    """Exception raised when autoencoder training blows up."""

    def __init__(self, epoch: int, mse: float):
        super().__init__(
            f"autoencoder training unstable at epoch {epoch}: mse = {mse:.3e} "
            f"(limit {AE_INSTABILITY_MSE:.0e}); reduce the learning rate"
        )
        self.epoch = epoch
        self.mse = mse


def noise_seed(cfg: AeTrainConfig, epoch: int, index: int) -> Tuple[int, ...]:
    """Seed of the noise drawn for corpus image ``index`` in ``epoch``."""
    if cfg.resample_noise:
        return (cfg.seed, epoch, index)
    return (cfg.seed, index)


def ae_train_epoch(
    corpus: Sequence[ImageTensor],
    model: AutoencoderModel,
    cfg: AeTrainConfig,
    epoch: int = 1,
) -> Tuple[AutoencoderModel, EpochStats]:
    """
    One SGD pass over the corpus.

    Statistics are measured on each batch before its update. ``energy`` holds the
    mean denoising loss 1/2 ||clean - reconstruction||^2 per image, so the row
    fits the shared stats schema.

    Args:
        corpus: Clean training images
        model: Current parameters
        cfg: Training settings
        epoch: 1-based epoch number (seeds batch order and noise)

    Returns:
        Tuple of (updated model, epoch statistics)

    Raises:
        ValueError: If the corpus is empty
        AeInstabilityError: If the MSE exceeds 1e4 or parameters become non-finite
    """
    if len(corpus) == 0:
        raise ValueError("corpus must not be empty")

    learning = cfg.learning_rate > 0
    start = model.parameters()
    rng = np.random.default_rng([cfg.seed, epoch])
    order = rng.permutation(len(corpus))
    mse_sum = loss_sum = active_sum = 0.0

    for begin in range(0, len(order), cfg.batch_size):
        batch = order[begin : begin + cfg.batch_size]
        grad_encoder = np.zeros_like(model.encoder.elements)
        grad_decoder = np.zeros_like(model.decoder.elements)
        grad_bias = np.zeros_like(model.encoder_bias)
        batch_mse = 0.0

        for index in batch:
            clean = corpus[index]
            noisy = add_gaussian_noise(clean, cfg.noise_sigma, noise_seed(cfg, epoch, int(index)))
            acts, recon = ae_forward(noisy, model)
            residual = clean.data - recon.data
            sq_error = float(np.sum(residual * residual))
            batch_mse += sq_error / residual.size
            loss_sum += 0.5 * sq_error
            active_sum += float(np.count_nonzero(acts.data)) / acts.data.size
            if learning:
                grads = ae_backward(clean, noisy, model, forward=(acts, recon))
                grad_encoder += grads.encoder
                grad_decoder += grads.decoder
                grad_bias += grads.bias

        if not np.isfinite(batch_mse) or batch_mse / len(batch) > AE_INSTABILITY_MSE:
            raise AeInstabilityError(epoch, batch_mse / len(batch))
        mse_sum += batch_mse

        if learning:
            rate = cfg.learning_rate / (len(batch) * corpus[batch[0]].data.size)
            model = _sgd_step(model, grad_encoder, grad_decoder, grad_bias, rate, epoch)

    n = len(corpus)
    mse = mse_sum / n
    if not np.isfinite(mse) or mse > AE_INSTABILITY_MSE:
        raise AeInstabilityError(epoch, mse)
    stats = EpochStats(
        epoch=epoch,
        mse=mse,
        energy=loss_sum / n,
        percent_active=active_sum / n,
        dict_delta=float(np.linalg.norm(model.parameters() - start)),
    )
    logger.info(stats.format_line())
    return model, stats


def _sgd_step(
    model: AutoencoderModel,
    grad_encoder: np.ndarray,
    grad_decoder: np.ndarray,
    grad_bias: np.ndarray,
    rate: float,
    epoch: int,
) -> AutoencoderModel:
    encoder = model.encoder.elements - rate * grad_encoder
    decoder = model.decoder.elements - rate * grad_decoder
    bias = model.encoder_bias - rate * grad_bias
    if not all(np.all(np.isfinite(block)) for block in (encoder, decoder, bias)):
        raise AeInstabilityError(epoch, float("inf"))
    return AutoencoderModel(
        encoder=model.encoder.with_elements(encoder),
        encoder_bias=bias,
        decoder=model.decoder.with_elements(decoder),
    )


def train_autoencoder(
    corpus: Sequence[ImageTensor],
    cfg: AeTrainConfig,
    model: Optional[AutoencoderModel] = None,
    on_epoch: Optional[Callable[[EpochStats], None]] = None,
    geometry: Optional[Geometry] = None,
) -> Tuple[AutoencoderModel, TrainStats]:
    """
    Run ``cfg.epochs`` epochs of denoising training.

    Args:
        corpus: Clean training images
        cfg: Training settings
        model: Starting model; if None one is drawn with :func:`init_autoencoder`
            from ``cfg.seed`` and ``geometry``
        on_epoch: Optional callback receiving every EpochStats row
        geometry: Filter count, patch and stride for a fresh model

    Returns:
        Tuple of (trained model, TrainStats)
    """
    if model is None:
        if geometry is None:
            if len(corpus) == 0:
                raise ValueError("corpus must not be empty")
            geometry = Geometry(
                image_height=corpus[0].height,
                image_width=corpus[0].width,
                channels=corpus[0].channels,
            )
        model = init_autoencoder(
            cfg.seed, geometry.num_elements, geometry.patch, geometry.channels, geometry.stride
        )

    stats = TrainStats()
    for epoch in range(1, cfg.epochs + 1):
        model, row = ae_train_epoch(corpus, model, cfg, epoch=epoch)
        stats.append(row)
        if on_epoch is not None:
            on_epoch(row)
    return model, stats
