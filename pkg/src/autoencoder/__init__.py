"""
Autoencoder module.

This module contains:
- The single-layer convolutional denoising autoencoder (forward, backward)
- Gradient checks against finite differences
- SGD training with fresh noise per presentation
"""

from .model import (
    AutoencoderModel,
    AeGradients,
    GradientErrors,
    init_autoencoder,
    add_gaussian_noise,
    ae_forward,
    ae_backward,
    denoising_loss,
    ae_gradient_check,
)
from .training import (
    AeInstabilityError,
    noise_seed,
    ae_train_epoch,
    train_autoencoder,
)

__all__ = [
    "AutoencoderModel",
    "AeGradients",
    "GradientErrors",
    "init_autoencoder",
    "add_gaussian_noise",
    "ae_forward",
    "ae_backward",
    "denoising_loss",
    "ae_gradient_check",
    "AeInstabilityError",
    "noise_seed",
    "ae_train_epoch",
    "train_autoencoder",
]
