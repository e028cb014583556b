"""
Data validation functions for run inputs.

Every validator returns ``(is_valid, error_messages)`` and never raises, so a
caller can report all problems at once before any computation starts.
"""

from typing import Any, Iterable, List, Optional, Tuple

import numpy as np

from ..config import ModelKind
from .formats import KIND_NAMES, SUPPORTED_PLANES


def validate_geometry(
    image_height: int, image_width: int, patch: int, stride: int
) -> Tuple[bool, List[str]]:
    """
    Validate that patches of ``patch`` pixels at ``stride`` tile an image exactly.

    Checks:
    - All values are positive integers
    - The patch fits in the image
    - The stride divides (side - patch) on both axes

    Example:
        >>> validate_geometry(64, 64, 8, 4)
        (True, [])
        >>> validate_geometry(64, 62, 8, 4)[1]
        ['Stride 4 does not divide image width 62 minus patch 8']
    """
    errors = []
    values = {
        "image height": image_height,
        "image width": image_width,
        "patch": patch,
        "stride": stride,
    }
    for name, value in values.items():
        if not isinstance(value, (int, np.integer)) or value <= 0:
            errors.append(f"{name.capitalize()} must be a positive integer, got {value!r}")
    if errors:
        return (False, errors)

    for axis, size in (("height", image_height), ("width", image_width)):
        if size < patch:
            errors.append(f"Image {axis} {size} is smaller than patch {patch}")
        elif (size - patch) % stride != 0:
            errors.append(
                f"Stride {stride} does not divide image {axis} {size} minus patch {patch}"
            )

    return (len(errors) == 0, errors)


def validate_manifest(
    manifest: Any, patch: Optional[int] = None, stride: Optional[int] = None
) -> Tuple[bool, List[str]]:
    """
    Validate a corpus manifest against a model geometry.

    Checks:
    - At least one entry
    - Target size is compatible with patch and stride (when given)
    - Every file entry exists

    Args:
        manifest: CorpusManifest
        patch: Model patch size, or None to skip the geometry check
        stride: Model stride, or None to skip the geometry check
    """
    errors = []
    if not manifest.entries:
        errors.append("Manifest has no entries")
    if patch is not None and stride is not None:
        _, geometry_errors = validate_geometry(
            manifest.target_height, manifest.target_width, patch, stride
        )
        errors.extend(f"Manifest size: {err}" for err in geometry_errors)
    for index, entry in enumerate(manifest.entries):
        if entry.path is not None and not entry.path.exists():
            errors.append(f"Entry {index}: file not found: {entry.path}")
    return (len(errors) == 0, errors)


def validate_image_array(data: np.ndarray) -> Tuple[bool, List[str]]:
    """
    Validate a decoded image before it enters the pipeline.

    Checks:
    - Shape is (height, width, planes) with 1 or 3 planes
    - Values are finite and within [0, 1]
    """
    errors = []
    data = np.asarray(data)
    if data.ndim != 3:
        errors.append(f"Image must have 3 axes (height, width, planes), got shape {data.shape}")
        return (False, errors)
    if data.shape[2] not in SUPPORTED_PLANES:
        kind = {2: "gray+alpha", 4: "RGBA"}.get(data.shape[2], f"{data.shape[2]}-plane")
        errors.append(
            f"Unsupported channel count {data.shape[2]} ({kind}); "
            f"supported: {', '.join(str(p) for p in SUPPORTED_PLANES)}"
        )
    if not np.all(np.isfinite(data)):
        errors.append("Image contains non-finite values")
    elif data.size and (data.min() < 0.0 or data.max() > 1.0):
        errors.append(f"Image values must lie in [0, 1], got [{data.min()}, {data.max()}]")
    return (len(errors) == 0, errors)


def validate_kind(actual: ModelKind, expected: Iterable[ModelKind]) -> Tuple[bool, List[str]]:
    """Validate that a loaded LCAD file is of one of the ``expected`` kinds."""
    expected = list(expected)
    if actual in expected:
        return (True, [])
    names = " or ".join(KIND_NAMES[kind] for kind in expected)
    return (False, [f"Expected a {names} file, got {KIND_NAMES[ModelKind(actual)]}"])


def validate_unit_norm(norms: np.ndarray, tolerance: float = 1e-9) -> Tuple[bool, List[str]]:
    """
    Validate that every element norm is 1 within ``tolerance``.

    Example:
        >>> validate_unit_norm(np.array([1.0, 0.5]))
        (False, ['Element 1 has norm 0.5, expected 1'])
    """
    errors = [
        f"Element {k} has norm {norm:.6g}, expected 1"
        for k, norm in enumerate(np.asarray(norms, dtype=np.float64))
        if not abs(norm - 1.0) <= tolerance
    ]
    return (len(errors) == 0, errors)
