"""
Functions for loading images, models, codes and tables from files.

This module reads every file the toolkit writes (LCAD checkpoints and
activation files, CSV tables) plus PNG input images, with validation and
clear error messages.
"""

import csv
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import png

from ..autoencoder.model import AutoencoderModel
from ..config import ModelKind
from ..core import ActivationTensor, Dictionary
from ..sparse_coding.trainer import EpochStats, TrainStats
from .formats import (
    ENERGY_TRACE_COLUMNS,
    FLOAT_DTYPE,
    FORMAT_VERSION,
    HEADER,
    KIND_NAMES,
    MAGIC,
    REPORT_BLOCKS,
    TRAIN_STATS_COLUMNS,
)

Model = Union[Dictionary, AutoencoderModel]


class DataLoadError(Exception):
    """Exception raised when data loading fails."""


class CheckpointError(DataLoadError):
    """Exception raised when an LCAD file is malformed or of the wrong kind."""


def _require_file(filepath: Union[str, Path]) -> Path:
    filepath = Path(filepath)
    if not filepath.exists():
        raise FileNotFoundError(f"File not found: {filepath}")
    return filepath


def read_png(filepath: Union[str, Path]) -> np.ndarray:
    """
    Decode a PNG into a float array in [0, 1].

    Palettes and transparency chunks are expanded by the decoder; the result
    keeps the file's planes (1 gray, 2 gray+alpha, 3 RGB, 4 RGBA).

    Args:
        filepath: PNG file

    Returns:
        Array of shape (height, width, planes)

    Raises:
        FileNotFoundError: If the file doesn't exist
        DataLoadError: If the file does not decode as PNG

    Example:
        >>> read_png('data/chart.png').shape
        (128, 128, 3)
    """
    filepath = _require_file(filepath)
    try:
        width, height, rows, info = png.Reader(filename=str(filepath)).asDirect()
        pixels = np.vstack([np.asarray(row, dtype=np.float64) for row in rows])
    except (png.Error, ValueError, OSError) as e:
        raise DataLoadError(f"Cannot decode PNG {filepath}: {e}")
    planes = int(info["planes"])
    scale = float(2 ** int(info["bitdepth"]) - 1)
    return pixels.reshape(height, width, planes) / scale


def _read_header(data: bytes, filepath: Path) -> Tuple[ModelKind, Tuple[int, int, int, int]]:
    if len(data) < HEADER.size:
        raise CheckpointError(f"{filepath}: file too short for an LCAD header")
    magic, version, kind, *fields = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{filepath}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"{filepath}: unsupported format version {version} (expected {FORMAT_VERSION})"
        )
    try:
        kind = ModelKind(kind)
    except ValueError:
        raise CheckpointError(f"{filepath}: unknown kind byte {kind}")
    if min(fields) <= 0:
        raise CheckpointError(f"{filepath}: header fields must be positive, got {fields}")
    return kind, tuple(fields)


def _payload(data: bytes, filepath: Path, count: int) -> np.ndarray:
    if (len(data) - HEADER.size) % 8 or len(data) - HEADER.size != 8 * count:
        raise CheckpointError(
            f"{filepath}: payload holds {(len(data) - HEADER.size) / 8:g} values, "
            f"header implies {count}"
        )
    return np.frombuffer(data, dtype=FLOAT_DTYPE, offset=HEADER.size).astype(np.float64)


def read_kind(filepath: Union[str, Path]) -> ModelKind:
    """Kind byte of an LCAD file, after checking magic and version."""
    filepath = _require_file(filepath)
    with open(filepath, "rb") as f:
        data = f.read(HEADER.size)
    return _read_header(data, filepath)[0]


def load_checkpoint(filepath: Union[str, Path]) -> Model:
    """
    Load a model from an LCAD checkpoint.

    Args:
        filepath: Checkpoint file

    Returns:
        Dictionary for kind 0, AutoencoderModel for kind 1

    Raises:
        FileNotFoundError: If the file doesn't exist
        CheckpointError: On a bad header, a size mismatch or an activation file
    """
    filepath = _require_file(filepath)
    data = filepath.read_bytes()
    kind, (K, patch, channels, stride) = _read_header(data, filepath)
    block = K * patch * patch * channels
    shape = (K, patch, patch, channels)

    try:
        if kind is ModelKind.SPARSE_CODING:
            values = _payload(data, filepath, block)
            return Dictionary(values.reshape(shape), stride)
        if kind is ModelKind.AUTOENCODER:
            values = _payload(data, filepath, 2 * block + K)
            return AutoencoderModel(
                encoder=Dictionary(values[:block].reshape(shape), stride),
                encoder_bias=values[2 * block :],
                decoder=Dictionary(values[block : 2 * block].reshape(shape), stride),
            )
    except ValueError as e:
        raise CheckpointError(f"{filepath}: {e}")
    raise CheckpointError(f"{filepath}: holds {KIND_NAMES[kind]}, not a model checkpoint")


def load_activations(filepath: Union[str, Path]) -> Tuple[ActivationTensor, int]:
    """
    Load a code written by :func:`~src.io.exporters.save_activations`.

    Returns:
        Tuple of (activations, stride)

    Raises:
        CheckpointError: If the file is not an activation file or is malformed
    """
    filepath = _require_file(filepath)
    data = filepath.read_bytes()
    kind, (K, map_h, map_w, stride) = _read_header(data, filepath)
    if kind is not ModelKind.ACTIVATIONS:
        raise CheckpointError(f"{filepath}: holds {KIND_NAMES[kind]}, not activations")
    try:
        values = _payload(data, filepath, map_h * map_w * K)
        return ActivationTensor(values.reshape(map_h, map_w, K)), stride
    except ValueError as e:
        raise CheckpointError(f"{filepath}: {e}")


def _read_table(filepath: Path, columns: List[str]) -> List[Dict[str, str]]:
    with open(filepath, "r", newline="") as f:
        reader = csv.reader(row for row in f if row.strip() and not row.startswith("#"))
        header = next(reader, None)
        if header != columns:
            raise DataLoadError(f"{filepath}: expected header {','.join(columns)}, got {header}")
        rows = []
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(columns):
                raise DataLoadError(
                    f"{filepath}: data row {row_no} has {len(row)} of {len(columns)} columns"
                )
            rows.append(dict(zip(columns, row)))
    return rows


def load_train_stats(filepath: Union[str, Path]) -> TrainStats:
    """
    Load a training statistics CSV.

    Raises:
        FileNotFoundError: If the file doesn't exist
        DataLoadError: On a wrong header or malformed rows
    """
    filepath = _require_file(filepath)
    stats = TrainStats()
    try:
        for row in _read_table(filepath, TRAIN_STATS_COLUMNS):
            stats.append(
                EpochStats(
                    epoch=int(row["epoch"]),
                    mse=float(row["mse"]),
                    energy=float(row["energy"]),
                    percent_active=float(row["percent_active"]),
                    dict_delta=float(row["dict_delta"]),
                )
            )
    except ValueError as e:
        raise DataLoadError(f"Invalid training statistics in {filepath}: {e}")
    return stats


def load_energy_trace(filepath: Union[str, Path]) -> np.ndarray:
    """Load an energy trace CSV (``step,energy``) as an array of energies."""
    filepath = _require_file(filepath)
    rows = _read_table(filepath, ENERGY_TRACE_COLUMNS)
    try:
        return np.array([float(row["energy"]) for row in rows])
    except ValueError as e:
        raise DataLoadError(f"Invalid energy trace in {filepath}: {e}")


def load_report_blocks(filepath: Union[str, Path]) -> Dict[str, List[Dict[str, str]]]:
    """
    Load a metrics report CSV as its named blocks.

    Returns:
        Mapping of block name ("summary", "per_element", "per_image") to rows

    Raises:
        DataLoadError: On an unknown block or a wrong block header
    """
    filepath = _require_file(filepath)
    blocks: Dict[str, List[Dict[str, str]]] = {}
    current = None
    with open(filepath, "r", newline="") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                current = line.lstrip("#").strip()
                if current not in REPORT_BLOCKS:
                    raise DataLoadError(f"{filepath}: line {line_no}: unknown block '{current}'")
                blocks[current] = []
                continue
            if current is None:
                raise DataLoadError(f"{filepath}: line {line_no}: row outside a block")
            cells = next(csv.reader([line]))
            columns = REPORT_BLOCKS[current]
            if cells == columns:
                continue
            if len(cells) != len(columns):
                raise DataLoadError(f"{filepath}: line {line_no}: expected {len(columns)} columns")
            blocks[current].append(dict(zip(columns, cells)))
    return blocks
