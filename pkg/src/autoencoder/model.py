"""
Single-layer convolutional denoising autoencoder.

The encoder is a filter bank W that strides over the input exactly like the
sparse coding dictionary, so the two models share geometry:

    a = W x + b                 (linear, dense code)
    x_hat = D a                 (conv_transpose with an untied decoder bank D)

It is trained to reconstruct the clean image from a noise-corrupted copy,
minimizing L = 1/2 ||x_clean - D (W x_noisy + b)||^2 by backpropagation.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import DEFAULT_AE_INIT_SCALE
from ..core import (
    ActivationTensor,
    Dictionary,
    DimensionMismatchError,
    ImageTensor,
    conv_transpose,
    correlate,
    hebbian_product,
)
from ..sparse_coding.trainer import relative_error

Seed = Union[int, Sequence[int]]


@dataclass(frozen=True, eq=False)
class AutoencoderModel:
    """
    Encoder bank, per-filter bias and decoder bank of the baseline.

    Attributes:
        encoder: Filter bank W (K x patch x patch x channels, with the stride)
        encoder_bias: K biases, one per filter
        decoder: Independent filter bank D of identical shape
    """

    encoder: Dictionary
    encoder_bias: np.ndarray
    decoder: Dictionary

    def __post_init__(self):
        if self.encoder.shape != self.decoder.shape:
            raise DimensionMismatchError(
                f"encoder {self.encoder.shape} and decoder {self.decoder.shape} differ"
            )
        bias = np.array(self.encoder_bias, dtype=np.float64).reshape(-1)
        if bias.size != self.encoder.num_elements:
            raise DimensionMismatchError(
                f"bias has {bias.size} entries, encoder has {self.encoder.num_elements} filters"
            )
        if not np.all(np.isfinite(bias)):
            raise ValueError("encoder_bias contains non-finite values")
        bias.setflags(write=False)
        object.__setattr__(self, "encoder_bias", bias)

    @property
    def num_elements(self) -> int:
        return self.encoder.num_elements

    @property
    def patch(self) -> int:
        return self.encoder.patch

    @property
    def channels(self) -> int:
        return self.encoder.channels

    @property
    def stride(self) -> int:
        return self.encoder.stride

    def normalized(self) -> "AutoencoderModel":
        """
        Copy with unit-norm encoder filters.

        Each bias is divided by the norm of its filter, so every activation map is
        rescaled by one factor; the decoder takes the inverse factor and the
        reconstruction is unchanged. Zero filters are left alone.
        """
        norms = self.encoder.norms()
        safe = np.where(norms > 0, norms, 1.0)
        scale = safe.reshape(-1, 1, 1, 1)
        return AutoencoderModel(
            encoder=self.encoder.with_elements(self.encoder.elements / scale),
            encoder_bias=self.encoder_bias / safe,
            decoder=self.decoder.with_elements(self.decoder.elements * scale),
        )

    def parameters(self) -> np.ndarray:
        """All parameters as one flat vector (encoder, decoder, bias)."""
        return np.concatenate(
            [self.encoder.elements.ravel(), self.decoder.elements.ravel(), self.encoder_bias]
        )

    def __repr__(self) -> str:
        return (
            f"AutoencoderModel(num_elements={self.num_elements}, patch={self.patch}, "
            f"channels={self.channels}, stride={self.stride})"
        )


class AeGradients(NamedTuple):
    """Gradients of the denoising loss for each parameter block."""

    encoder: np.ndarray
    decoder: np.ndarray
    bias: np.ndarray


class GradientErrors(NamedTuple):
    """Max relative error of each gradient block against finite differences."""

    encoder: float
    decoder: float
    bias: float

    def worst(self) -> float:
        return max(self.encoder, self.decoder, self.bias)


def init_autoencoder(
    seed: int,
    K: int,
    patch: int,
    channels: int,
    stride: int,
    scale: float = DEFAULT_AE_INIT_SCALE,
) -> AutoencoderModel:
    """
    Seeded Gaussian initialization.

    Weights are drawn from N(0, (scale / sqrt(patch * patch * channels))^2), so a
    filter has an expected norm close to ``scale``; biases start at zero.
    """
    for name, value in (("K", K), ("patch", patch), ("channels", channels), ("stride", stride)):
        if value <= 0:
            raise ValueError(f"{name} must be positive, got {value}")
    if not scale >= 0:
        raise ValueError(f"scale must be nonnegative, got {scale}")
    rng = np.random.default_rng(seed)
    std = scale / np.sqrt(patch * patch * channels)
    shape = (K, patch, patch, channels)
    encoder = Dictionary(rng.normal(0.0, std, size=shape), stride)
    decoder = Dictionary(rng.normal(0.0, std, size=shape), stride)
    return AutoencoderModel(encoder, np.zeros(K), decoder)


def add_gaussian_noise(image: ImageTensor, sigma: float, seed: Seed) -> ImageTensor:
    """
    Corrupt ``image`` with i.i.d. N(0, sigma^2) noise; deterministic per seed.

    Example:
        >>> add_gaussian_noise(image, 0.0, seed=3) is image
        True
    """
    if not sigma >= 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        return image
    rng = np.random.default_rng(seed)
    return ImageTensor(image.data + rng.normal(0.0, sigma, size=image.shape))


def _check_geometry(image: ImageTensor, model: AutoencoderModel) -> None:
    if image.channels != model.channels:
        raise DimensionMismatchError(
            f"channels: image has {image.channels}, model has {model.channels}"
        )


def ae_forward(
    noisy: ImageTensor, model: AutoencoderModel
) -> Tuple[ActivationTensor, ImageTensor]:
    """
    Encode and decode one (noisy) image.

    Returns:
        Tuple of (activations a = correlate(noisy, W) + b, reconstruction D a)

    Raises:
        DimensionMismatchError: If the image does not fit the model geometry
    """
    _check_geometry(noisy, model)
    drive = correlate(noisy, model.encoder)
    acts = ActivationTensor(drive.data + model.encoder_bias)
    recon = conv_transpose(acts, model.decoder, noisy.height, noisy.width)
    return acts, recon


def denoising_loss(clean: ImageTensor, noisy: ImageTensor, model: AutoencoderModel) -> float:
    """L = 1/2 ||clean - reconstruction(noisy)||^2."""
    _, recon = ae_forward(noisy, model)
    residual = clean.data - recon.data
    return 0.5 * float(np.sum(residual * residual))


def ae_backward(
    clean: ImageTensor,
    noisy: ImageTensor,
    model: AutoencoderModel,
    forward: Optional[Tuple[ActivationTensor, ImageTensor]] = None,
) -> AeGradients:
    """
    Exact gradients of the denoising loss.

    With r = clean - D a:
    - dL/dD = -hebbian_product(r, a)
    - dL/da = -correlate(r, D)          (residual back-projected through the decoder)
    - dL/dW = hebbian_product(noisy, dL/da)
    - dL/db[k] = sum over sites of dL/da[..., k]

    Args:
        clean: Target image
        noisy: Encoder input
        model: Current parameters
        forward: Result of ae_forward(noisy, model) if already computed

    Raises:
        DimensionMismatchError: If clean and noisy differ in shape
    """
    if clean.shape != noisy.shape:
        raise DimensionMismatchError(f"clean {clean.shape} and noisy {noisy.shape} differ")
    acts, recon = forward if forward is not None else ae_forward(noisy, model)
    residual = ImageTensor(clean.data - recon.data)

    grad_decoder = -hebbian_product(residual, acts, model.patch, model.stride)
    grad_acts = ActivationTensor(-correlate(residual, model.decoder).data)
    grad_encoder = hebbian_product(noisy, grad_acts, model.patch, model.stride)
    grad_bias = np.sum(grad_acts.data, axis=(0, 1))
    return AeGradients(encoder=grad_encoder, decoder=grad_decoder, bias=grad_bias)


def _numeric_gradient(loss, values: np.ndarray, epsilon: float) -> np.ndarray:
    numeric = np.zeros_like(values)
    for index in np.ndindex(values.shape):
        plus = values.copy()
        minus = values.copy()
        plus[index] += epsilon
        minus[index] -= epsilon
        numeric[index] = (loss(plus) - loss(minus)) / (2.0 * epsilon)
    return numeric


def ae_gradient_check(
    clean: ImageTensor,
    noisy: ImageTensor,
    model: AutoencoderModel,
    epsilon: float = 1e-5,
) -> GradientErrors:
    """
    Compare ae_backward with centred finite differences of the denoising loss.

    Returns:
        Max relative error of each block

    Raises:
        ValueError: If the model has more than 500 parameters
    """
    if model.parameters().size > 500:
        raise ValueError(
            f"finite differences need <= 500 model parameters, got {model.parameters().size}"
        )
    analytic = ae_backward(clean, noisy, model)

    def encoder_loss(values):
        trial = AutoencoderModel(
            model.encoder.with_elements(values), model.encoder_bias, model.decoder
        )
        return denoising_loss(clean, noisy, trial)

    def decoder_loss(values):
        trial = AutoencoderModel(
            model.encoder, model.encoder_bias, model.decoder.with_elements(values)
        )
        return denoising_loss(clean, noisy, trial)

    def bias_loss(values):
        return denoising_loss(clean, noisy, AutoencoderModel(model.encoder, values, model.decoder))

    return GradientErrors(
        encoder=relative_error(
            analytic.encoder, _numeric_gradient(encoder_loss, model.encoder.elements, epsilon)
        ),
        decoder=relative_error(
            analytic.decoder, _numeric_gradient(decoder_loss, model.decoder.elements, epsilon)
        ),
        bias=relative_error(
            analytic.bias, _numeric_gradient(bias_loss, np.array(model.encoder_bias), epsilon)
        ),
    )
