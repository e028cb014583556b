"""
Corpus manifests, image ingestion and preprocessing.

A manifest is a line-oriented text file with one entry per line:

    # size: 64x64
    # mean_subtract: true
    # seed: 0
    file:charts/sales.png
    synth:17:2:aglt
    synth:18:1:b mean_subtract=false

``file:`` paths are relative to the manifest's directory. ``synth:`` entries
give seed, series count and style flags of a synthetic graphic. An entry may end
with ``mean_subtract=true|false`` to override the manifest default.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, cpu_count, delayed

from ..config import DEFAULT_IMAGE_SIZE, DEFAULT_SEED
from ..core import ImageTensor
from ..io.exporters import atomic_write_bytes
from ..io.loaders import DataLoadError, read_png
from ..io.validators import validate_image_array
from .synth import SynthSpec, synth_graphic

logger = logging.getLogger(__name__)


class CorpusBuildError(DataLoadError):
    """Exception raised when one or more manifest entries fail to load."""

    def __init__(self, failures: Sequence[Tuple[int, str]]):
        self.failures = list(failures)
        lines = "\n".join(f"  - entry {index}: {message}" for index, message in self.failures)
        super().__init__(f"{len(self.failures)} manifest entries failed:\n{lines}")


@dataclass(frozen=True)
class ManifestEntry:
    """
    One corpus entry: a PNG file or a synthetic graphic.

    Attributes:
        path: Image file (None for synthetic entries)
        spec: Synthetic graphic recipe (None for file entries)
        mean_subtract: Per-entry override of the manifest default
    """

    path: Optional[Path] = None
    spec: Optional[SynthSpec] = None
    mean_subtract: Optional[bool] = None

    def __post_init__(self):
        if (self.path is None) == (self.spec is None):
            raise ValueError("an entry needs exactly one of path or spec")
        if self.path is not None:
            object.__setattr__(self, "path", Path(self.path))

    def to_line(self, base_dir: Optional[Path] = None) -> str:
        if self.spec is not None:
            token = self.spec.to_token()
        else:
            path = self.path
            if base_dir is not None:
                try:
                    path = path.resolve().relative_to(Path(base_dir).resolve())
                except ValueError:
                    path = path.resolve()
            token = f"file:{path.as_posix()}"
        if self.mean_subtract is not None:
            token += f" mean_subtract={'true' if self.mean_subtract else 'false'}"
        return token


@dataclass(frozen=True)
class CorpusManifest:
    """
    Ordered list of corpus entries plus the preprocessing shared by all of them.

    Attributes:
        entries: Corpus entries in order
        target_height: Height every image is resized to
        target_width: Width every image is resized to
        mean_subtracted: Subtract each image's mean (default for all entries)
        seed: Corpus seed recorded for reproducibility
    """

    entries: Tuple[ManifestEntry, ...]
    target_height: int = DEFAULT_IMAGE_SIZE
    target_width: int = DEFAULT_IMAGE_SIZE
    mean_subtracted: bool = True
    seed: int = DEFAULT_SEED
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValueError("manifest has no entries")
        if self.target_height <= 0 or self.target_width <= 0:
            raise ValueError(f"size must be positive, got {self.target_height}x{self.target_width}")

    def __len__(self) -> int:
        return len(self.entries)

    def mean_subtract_for(self, entry: ManifestEntry) -> bool:
        return self.mean_subtracted if entry.mean_subtract is None else entry.mean_subtract


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected true or false, got '{text.strip()}'")


def _parse_size(text: str) -> Tuple[int, int]:
    parts = text.strip().lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"expected HxW, got '{text.strip()}'")
    return int(parts[0]), int(parts[1])


def parse_synth_token(token: str) -> SynthSpec:
    """Parse ``synth:<seed>:<num_series>:<flags>``."""
    parts = token.split(":")
    if len(parts) != 4 or parts[0] != "synth":
        raise ValueError(f"expected synth:<seed>:<num_series>:<flags>, got '{token}'")
    return SynthSpec(seed=int(parts[1]), num_series=int(parts[2]), flags=parts[3] or "-")


def parse_manifest(text: str, base_dir: Union[str, Path] = ".") -> CorpusManifest:
    """
    Parse manifest text.

    Args:
        text: Manifest contents
        base_dir: Directory that relative ``file:`` paths are resolved against

    Returns:
        CorpusManifest

    Raises:
        DataLoadError: Listing every malformed line, or if there are no entries
    """
    base_dir = Path(base_dir)
    size = (DEFAULT_IMAGE_SIZE, DEFAULT_IMAGE_SIZE)
    mean_subtract = True
    seed = DEFAULT_SEED
    entries: List[ManifestEntry] = []
    errors = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            if line.startswith("#"):
                body = line[1:].strip()
                key, sep, value = body.partition(":")
                key = key.strip().lower().replace("-", "_")
                if sep and key == "size":
                    size = _parse_size(value)
                elif sep and key == "mean_subtract":
                    mean_subtract = _parse_bool(value)
                elif sep and key == "seed":
                    seed = int(value)
                continue

            override = None
            token = line
            head, _, tail = line.rpartition(" ")
            if tail.startswith("mean_subtract="):
                override = _parse_bool(tail.split("=", 1)[1])
                token = head.strip()

            if token.startswith("file:"):
                path = Path(token[len("file:") :].strip())
                if not path.is_absolute():
                    path = base_dir / path
                entries.append(ManifestEntry(path=path, mean_subtract=override))
            elif token.startswith("synth:"):
                entries.append(ManifestEntry(spec=parse_synth_token(token), mean_subtract=override))
            else:
                raise ValueError(f"expected 'file:<path>' or 'synth:...', got '{token}'")
        except ValueError as e:
            errors.append(f"line {line_no}: {e}")

    if errors:
        raise DataLoadError("Invalid manifest:\n" + "\n".join(f"  - {err}" for err in errors))
    if not entries:
        raise DataLoadError("Manifest has no entries")

    try:
        return CorpusManifest(
            entries=tuple(entries),
            target_height=size[0],
            target_width=size[1],
            mean_subtracted=mean_subtract,
            seed=seed,
            base_dir=base_dir,
        )
    except ValueError as e:
        raise DataLoadError(f"Invalid manifest: {e}")


def load_manifest(filepath: Union[str, Path]) -> CorpusManifest:
    """
    Load a manifest file; relative paths resolve against its directory.

    Raises:
        FileNotFoundError: If the file doesn't exist
        DataLoadError: If the manifest is malformed or empty
    """
    filepath = Path(filepath)
    if not filepath.exists():
        raise FileNotFoundError(f"Manifest not found: {filepath}")
    try:
        return parse_manifest(filepath.read_text(), base_dir=filepath.parent)
    except DataLoadError as e:
        raise DataLoadError(f"{filepath}: {e}")


def format_manifest(manifest: CorpusManifest) -> str:
    """Manifest text with the header directives and one line per entry."""
    lines = [
        f"# size: {manifest.target_height}x{manifest.target_width}",
        f"# mean_subtract: {'true' if manifest.mean_subtracted else 'false'}",
        f"# seed: {manifest.seed}",
    ]
    lines.extend(entry.to_line(manifest.base_dir) for entry in manifest.entries)
    return "\n".join(lines) + "\n"


def write_manifest(manifest: CorpusManifest, filepath: Union[str, Path]) -> None:
    """Write a manifest file (atomic); file paths are stored relative to its directory."""
    filepath = Path(filepath)
    relocated = CorpusManifest(
        entries=manifest.entries,
        target_height=manifest.target_height,
        target_width=manifest.target_width,
        mean_subtracted=manifest.mean_subtracted,
        seed=manifest.seed,
        base_dir=filepath.parent,
    )
    atomic_write_bytes(filepath, format_manifest(relocated).encode("utf-8"))
    logger.info("Manifest with %d entries written to %s", len(manifest), filepath)


def resize_bilinear(data: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """
    Bilinear resize with half-pixel centres and clamped borders.

    Output pixel i samples source coordinate (i + 0.5) * in / out - 0.5.
    Interpolation is written lo + w * (hi - lo), so constant images stay exact.

    Example:
        >>> board = np.array([[0.0, 1.0], [1.0, 0.0]])[:, :, None]
        >>> resize_bilinear(board, 4, 4)[1:3, 1:3, 0]
        array([[0.375, 0.625],
               [0.625, 0.375]])
    """
    data = np.asarray(data, dtype=np.float64)
    if out_h <= 0 or out_w <= 0:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")

    def axis_weights(size_in: int, size_out: int):
        coords = (np.arange(size_out) + 0.5) * (size_in / size_out) - 0.5
        coords = np.clip(coords, 0.0, size_in - 1)
        lo = np.floor(coords).astype(int)
        hi = np.minimum(lo + 1, size_in - 1)
        return lo, hi, coords - lo

    if data.shape[0] != out_h:
        lo, hi, w = axis_weights(data.shape[0], out_h)
        w = w.reshape((-1,) + (1,) * (data.ndim - 1))
        data = data[lo] + w * (data[hi] - data[lo])
    if data.shape[1] != out_w:
        lo, hi, w = axis_weights(data.shape[1], out_w)
        w = w.reshape((1, -1) + (1,) * (data.ndim - 2))
        data = data[:, lo] + w * (data[:, hi] - data[:, lo])
    return data


def load_image(
    filepath: Union[str, Path],
    height: int = DEFAULT_IMAGE_SIZE,
    width: int = DEFAULT_IMAGE_SIZE,
) -> ImageTensor:
    """
    Load a PNG as a 3-channel image in [0, 1], resized to height x width.

    Gray images are replicated to RGB; any other channel count is an error.

    Raises:
        FileNotFoundError: If the file doesn't exist
        DataLoadError: If decoding fails or the channel count is unsupported
    """
    data = read_png(filepath)
    is_valid, errors = validate_image_array(data)
    if not is_valid:
        raise DataLoadError(f"{filepath}: " + "; ".join(errors))
    if data.shape[2] == 1:
        data = np.repeat(data, 3, axis=2)
    return ImageTensor(resize_bilinear(data, height, width))


def preprocess(image: ImageTensor, mean_subtract: bool = True) -> ImageTensor:
    """
    Optional per-image mean subtraction (over all pixels and channels).

    A constant image maps to exact zeros.
    """
    if not mean_subtract:
        return image
    data = image.data
    if np.all(data == data.flat[0]):
        return ImageTensor(np.zeros_like(data))
    return ImageTensor(data - np.mean(data))


def _build_entry(manifest: CorpusManifest, entry: ManifestEntry) -> ImageTensor:
    if entry.spec is not None:
        image = synth_graphic(entry.spec, manifest.target_height, manifest.target_width)
    else:
        image = load_image(entry.path, manifest.target_height, manifest.target_width)
    return preprocess(image, manifest.mean_subtract_for(entry))


def build_corpus(manifest: CorpusManifest, threads: Optional[int] = None) -> List[ImageTensor]:
    """
    Load or synthesize and preprocess every entry, in manifest order.

    Entries are built on worker threads; failures are collected and reported
    together with their indices.

    Args:
        manifest: Corpus manifest
        threads: Worker count (None = all cores, 1 = sequential)

    Returns:
        List of images, one per entry

    Raises:
        CorpusBuildError: If any entry fails
    """

    def build(index: int):
        try:
            return _build_entry(manifest, manifest.entries[index]), None
        except (DataLoadError, OSError, ValueError) as e:
            return None, (index, str(e))

    workers = threads or cpu_count()
    indices = range(len(manifest.entries))
    if workers <= 1:
        results = [build(i) for i in indices]
    else:
        results = Parallel(n_jobs=workers, prefer="threads")(delayed(build)(i) for i in indices)

    failures = [failure for _, failure in results if failure is not None]
    if failures:
        raise CorpusBuildError(failures)
    logger.info("Built corpus of %d images", len(results))
    return [image for image, _ in results]
