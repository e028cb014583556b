"""
Dense tensors and the two strided linear maps of convolutional sparse coding.

The module provides:
- ImageTensor: an image x (height x width x channels)
- Dictionary: K convolutional elements (patch x patch x channels) with a stride
- ActivationTensor: a code a (map height x map width x K)
- correlate: analysis map, a[r, c, k] = <element k, patch of x at (r*stride, c*stride)>
- conv_transpose: synthesis map, the adjoint of correlate (overlap-add)
- hebbian_product: weighted sum of patches, the weight gradient of both maps

All arrays are 64-bit floats in row-major (row, col, channel/element) layout,
so patch extraction is a strided view. Patch placement is valid-only (no
padding): map side = (image side - patch) / stride + 1.

Example:
    >>> image = ImageTensor(np.ones((3, 3, 1)))
    >>> dictionary = Dictionary(np.ones((1, 2, 2, 1)), stride=1)
    >>> correlate(image, dictionary).data[..., 0]
    array([[4., 4.],
           [4., 4.]])
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.sparse.linalg import LinearOperator, eigsh

ArrayLike = Union[np.ndarray, Sequence[float]]


class DimensionMismatchError(ValueError):
    """Exception raised when tensor shapes are incompatible."""


def _as_float_array(data, ndim: int, name: str) -> np.ndarray:
    array = np.array(data, dtype=np.float64, order="C")
    if array.ndim != ndim:
        raise DimensionMismatchError(f"{name} must have {ndim} axes, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite values")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ImageTensor:
    """
    Dense image x of shape (height, width, channels).

    The wrapped array is a read-only float64 copy.
    """

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_float_array(self.data, 3, "ImageTensor"))
        if min(self.data.shape) <= 0:
            raise DimensionMismatchError(
                f"ImageTensor axes must be positive, got {self.data.shape}"
            )

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape

    @classmethod
    def zeros(cls, height: int, width: int, channels: int) -> "ImageTensor":
        return cls(np.zeros((height, width, channels)))

    def __repr__(self) -> str:
        return f"ImageTensor(height={self.height}, width={self.width}, channels={self.channels})"


@dataclass(frozen=True, eq=False)
class ActivationTensor:
    """Code a of shape (map_height, map_width, num_elements)."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_float_array(self.data, 3, "ActivationTensor"))

    @property
    def map_height(self) -> int:
        return self.data.shape[0]

    @property
    def map_width(self) -> int:
        return self.data.shape[1]

    @property
    def num_elements(self) -> int:
        return self.data.shape[2]

    @property
    def num_sites(self) -> int:
        return self.data.shape[0] * self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape

    @classmethod
    def zeros(cls, map_height: int, map_width: int, num_elements: int) -> "ActivationTensor":
        return cls(np.zeros((map_height, map_width, num_elements)))

    def element_map(self, k: int) -> np.ndarray:
        """Map of element k as a (map_height, map_width) array."""
        if not 0 <= k < self.num_elements:
            raise IndexError(f"element {k} out of range for K={self.num_elements}")
        return self.data[:, :, k]

    def __repr__(self) -> str:
        return (
            f"ActivationTensor(map_height={self.map_height}, map_width={self.map_width}, "
            f"num_elements={self.num_elements})"
        )


class DictionaryShape(NamedTuple):
    """Shape of a convolutional dictionary."""

    num_elements: int
    patch: int
    channels: int
    stride: int


@dataclass(frozen=True, eq=False)
class Dictionary:
    """
    Convolutional dictionary Phi: K elements of shape (patch, patch, channels).

    The same type holds the filter banks W of the autoencoder.

    Attributes:
        elements: Array of shape (K, patch, patch, channels)
        stride: Placement stride in pixels
    """

    elements: np.ndarray
    stride: int

    def __post_init__(self):
        object.__setattr__(self, "elements", _as_float_array(self.elements, 4, "Dictionary"))
        k, p, q, c = self.elements.shape
        if p != q:
            raise DimensionMismatchError(f"Dictionary elements must be square, got {p}x{q}")
        if min(k, p, c) <= 0:
            raise DimensionMismatchError(
                f"Dictionary axes must be positive, got {self.elements.shape}"
            )
        if int(self.stride) <= 0:
            raise ValueError(f"stride must be positive, got {self.stride}")
        object.__setattr__(self, "stride", int(self.stride))

    @property
    def num_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def patch(self) -> int:
        return self.elements.shape[1]

    @property
    def channels(self) -> int:
        return self.elements.shape[3]

    @property
    def shape(self) -> DictionaryShape:
        return DictionaryShape(self.num_elements, self.patch, self.channels, self.stride)

    def norms(self) -> np.ndarray:
        """L2 norm of every element."""
        return np.sqrt(np.sum(self.elements**2, axis=(1, 2, 3)))

    def is_unit_norm(self, tolerance: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.norms() - 1.0) <= tolerance))

    def normalized(self) -> "Dictionary":
        """Copy with every element scaled to unit L2 norm."""
        return Dictionary(normalize_elements(self.elements), self.stride)

    def with_elements(self, elements: np.ndarray) -> "Dictionary":
        return Dictionary(elements, self.stride)

    def gram(self) -> np.ndarray:
        """Zero-lag inner products between elements (K x K)."""
        flat = self.elements.reshape(self.num_elements, -1)
        return flat @ flat.T

    def map_shape(self, image_height: int, image_width: int) -> Tuple[int, int]:
        return map_shape(image_height, image_width, self.patch, self.stride)

    def __repr__(self) -> str:
        return (
            f"Dictionary(num_elements={self.num_elements}, patch={self.patch}, "
            f"channels={self.channels}, stride={self.stride})"
        )


def normalize_elements(elements: np.ndarray) -> np.ndarray:
    """
    Scale each block of ``elements`` (first axis) to unit L2 norm.

    All-zero blocks are left at zero.
    """
    elements = np.asarray(elements, dtype=np.float64)
    norms = np.sqrt(np.sum(elements**2, axis=tuple(range(1, elements.ndim))))
    safe = np.where(norms > 0, norms, 1.0)
    return elements / safe.reshape((-1,) + (1,) * (elements.ndim - 1))


def map_shape(image_height: int, image_width: int, patch: int, stride: int) -> Tuple[int, int]:
    """
    Activation map shape for valid patch placement.

    Raises:
        DimensionMismatchError: If the stride does not tile an axis exactly
    """
    sides = []
    for axis, size in (("height", image_height), ("width", image_width)):
        if size < patch:
            raise DimensionMismatchError(f"image {axis} {size} is smaller than patch {patch}")
        if (size - patch) % stride != 0:
            raise DimensionMismatchError(
                f"image {axis} {size}: stride {stride} does not divide {size} - {patch}"
            )
        sides.append((size - patch) // stride + 1)
    return sides[0], sides[1]


def _strided_patches(data: np.ndarray, patch: int, stride: int) -> np.ndarray:
    """View of shape (map_h, map_w, channels, patch, patch)."""
    windows = sliding_window_view(data, (patch, patch), axis=(0, 1))
    return windows[::stride, ::stride]


def correlate(image: ImageTensor, dictionary: Dictionary) -> ActivationTensor:
    """
    Analysis map Phi^T x (also the feed-forward a = W x).

    output[r, c, k] is the inner product of element k with the image patch whose
    top-left corner is (r * stride, c * stride).

    Raises:
        DimensionMismatchError: On a channel mismatch or a stride that does not tile
    """
    if image.channels != dictionary.channels:
        raise DimensionMismatchError(
            f"channels: image has {image.channels}, dictionary has {dictionary.channels}"
        )
    map_shape(image.height, image.width, dictionary.patch, dictionary.stride)
    windows = _strided_patches(image.data, dictionary.patch, dictionary.stride)
    return ActivationTensor(np.einsum("rcxij,kijx->rck", windows, dictionary.elements))


def conv_transpose(
    acts: ActivationTensor, dictionary: Dictionary, out_h: int, out_w: int
) -> ImageTensor:
    """
    Synthesis map Phi a: overlap-add of elements weighted by their coefficients.

    Adjoint of :func:`correlate`: <correlate(x), a> = <x, conv_transpose(a)>.

    Raises:
        DimensionMismatchError: If the code shape does not match (out_h, out_w)
    """
    if acts.num_elements != dictionary.num_elements:
        raise DimensionMismatchError(
            f"elements: activations have {acts.num_elements}, "
            f"dictionary has {dictionary.num_elements}"
        )
    expected = map_shape(out_h, out_w, dictionary.patch, dictionary.stride)
    for axis, got, want in zip(("height", "width"), acts.shape[:2], expected):
        if got != want:
            raise DimensionMismatchError(f"map {axis}: got {got}, expected {want}")

    p, s = dictionary.patch, dictionary.stride
    mh, mw = expected
    out = np.zeros((out_h, out_w, dictionary.channels))
    for di in range(p):
        for dj in range(p):
            out[di : di + s * (mh - 1) + 1 : s, dj : dj + s * (mw - 1) + 1 : s, :] += (
                acts.data @ dictionary.elements[:, di, dj, :]
            )
    return ImageTensor(out)


def hebbian_product(
    signal: ImageTensor, acts: ActivationTensor, patch: int, stride: int
) -> np.ndarray:
    """
    Activation-weighted sum of signal patches.

    block[k] = sum over sites (r, c) of acts[r, c, k] * signal patch at
    (r * stride, c * stride). With the reconstruction residual as the signal this
    is the Hebbian dictionary update; it is also the weight gradient of correlate.

    Returns:
        Array of shape (K, patch, patch, channels)
    """
    expected = map_shape(signal.height, signal.width, patch, stride)
    if acts.shape[:2] != expected:
        raise DimensionMismatchError(
            f"map: activations are {acts.shape[:2]}, signal implies {expected}"
        )
    windows = _strided_patches(signal.data, patch, stride)
    return np.einsum("rck,rcxij->kijx", acts.data, windows)


def operator_norm(dictionary: Dictionary, image_height: int, image_width: int) -> float:
    """
    Largest eigenvalue of Phi^T Phi for the given image size.

    Estimated with ARPACK on a matrix-free operator; the start vector is fixed so
    the estimate is reproducible.
    """
    mh, mw = dictionary.map_shape(image_height, image_width)
    shape = (mh, mw, dictionary.num_elements)
    size = int(np.prod(shape))

    def matvec(vector: np.ndarray) -> np.ndarray:
        acts = ActivationTensor(np.asarray(vector, dtype=np.float64).reshape(shape))
        recon = conv_transpose(acts, dictionary, image_height, image_width)
        return correlate(recon, dictionary).data.ravel()

    if size <= 64:
        dense = np.column_stack([matvec(column) for column in np.eye(size)])
        return float(np.linalg.eigvalsh(0.5 * (dense + dense.T))[-1])
    gram = LinearOperator((size, size), matvec=matvec, dtype=np.float64)
    value = eigsh(gram, k=1, which="LA", v0=np.ones(size), return_eigenvectors=False)
    return float(value[0])


def dot(a: ArrayLike, b: ArrayLike) -> float:
    """
    Inner product of two flat sequences.

    Uses an exactly rounded sum, so the result does not depend on summation order.

    Raises:
        DimensionMismatchError: If the lengths differ
    """
    a = np.ravel(np.asarray(a, dtype=np.float64))
    b = np.ravel(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise DimensionMismatchError(f"length: {a.size} vs {b.size}")
    return math.fsum((a * b).tolist())


def scale(alpha: float, x: ArrayLike) -> np.ndarray:
    """alpha * x"""
    return float(alpha) * np.asarray(x, dtype=np.float64)


def add(x: ArrayLike, y: ArrayLike) -> np.ndarray:
    """x + y, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatchError(f"length: {x.shape} vs {y.shape}")
    return x + y


def axpy(alpha: float, x: ArrayLike, y: ArrayLike) -> np.ndarray:
    """alpha * x + y, elementwise."""
    return add(scale(alpha, x), y)
