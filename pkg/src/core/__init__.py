"""
Core tensor module.

This module contains:
- The dense tensor types (images, dictionaries, activation codes)
- The strided analysis/synthesis maps and their weight gradient
- Small flat-vector helpers
"""

from .tensor import (
    ImageTensor,
    ActivationTensor,
    Dictionary,
    DictionaryShape,
    DimensionMismatchError,
    normalize_elements,
    map_shape,
    correlate,
    conv_transpose,
    hebbian_product,
    operator_norm,
    dot,
    scale,
    add,
    axpy,
)

__all__ = [
    "ImageTensor",
    "ActivationTensor",
    "Dictionary",
    "DictionaryShape",
    "DimensionMismatchError",
    "normalize_elements",
    "map_shape",
    "correlate",
    "conv_transpose",
    "hebbian_product",
    "operator_norm",
    "dot",
    "scale",
    "add",
    "axpy",
]
