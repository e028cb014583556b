"""
Sparse Interp (sparse_interp)

Convolutional sparse coding with the Locally Competitive Algorithm, a matched
denoising convolutional autoencoder, and metrics that compare how sparse,
selective and decorrelated the two representations are.
"""

__version__ = "0.1.0"
