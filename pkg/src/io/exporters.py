"""
Data export for models, codes, tables and images.

This module writes every artifact of a run:
- LCAD checkpoints (sparse coding dictionaries, autoencoders)
- Activation files (kind 2)
- Training statistics, energy traces, metrics reports and histogram bins (CSV)
- 8-bit RGB PNG images

Features:
- Binary files are written to a temporary file and renamed into place, so a
  reader never sees a partial checkpoint
- Floats in CSV use 17 significant digits and round-trip exactly
- No timestamps or host details, so repeated runs give identical bytes
- Automatic directory creation

Example:
    >>> from src.io import save_checkpoint, export_train_stats
    >>> save_checkpoint(dictionary, 'runs/sc.lcad')
    >>> export_train_stats(stats, 'runs/sc_stats.csv')
"""

import csv
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
import png

from ..analysis.metrics import MetricsReport
from ..autoencoder.model import AutoencoderModel
from ..config import ModelKind
from ..core import ActivationTensor, Dictionary
from ..sparse_coding.trainer import TrainStats
from .formats import (
    ENERGY_TRACE_COLUMNS,
    FLOAT_DTYPE,
    FORMAT_VERSION,
    HEADER,
    HISTOGRAM_COLUMNS,
    MAGIC,
    PNG_BITDEPTH,
    REPORT_BLOCKS,
    TRAIN_STATS_COLUMNS,
    format_float,
)

logger = logging.getLogger(__name__)


def _ensure_directory(filepath: Union[str, Path]) -> Path:
    """
    Ensure directory exists for output file.

    Args:
        filepath: Path to output file

    Returns:
        Path object with directory created
    """
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    return filepath


def atomic_write_bytes(filepath: Union[str, Path], data: bytes) -> None:
    """
    Write ``data`` to a temporary file next to ``filepath``, then rename it.

    Raises:
        OSError: If the file cannot be written
    """
    filepath = _ensure_directory(filepath)
    fd, tmp_name = tempfile.mkstemp(dir=filepath.parent, prefix=f".{filepath.name}.")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp_name, filepath)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _lcad_bytes(kind: ModelKind, fields: Sequence[int], blocks: Iterable[np.ndarray]) -> bytes:
    header = HEADER.pack(MAGIC, FORMAT_VERSION, int(kind), *(int(v) for v in fields))
    payload = b"".join(np.ascontiguousarray(b, dtype=FLOAT_DTYPE).tobytes() for b in blocks)
    return header + payload


def checkpoint_bytes(model: Union[Dictionary, AutoencoderModel]) -> bytes:
    """Serialized LCAD form of a dictionary (kind 0) or an autoencoder (kind 1)."""
    if isinstance(model, AutoencoderModel):
        enc = model.encoder
        fields = (enc.num_elements, enc.patch, enc.channels, enc.stride)
        blocks = (enc.elements, model.decoder.elements, model.encoder_bias)
        return _lcad_bytes(ModelKind.AUTOENCODER, fields, blocks)
    if isinstance(model, Dictionary):
        fields = (model.num_elements, model.patch, model.channels, model.stride)
        return _lcad_bytes(ModelKind.SPARSE_CODING, fields, (model.elements,))
    raise TypeError(f"cannot checkpoint {type(model).__name__}")


def save_checkpoint(
    model: Union[Dictionary, AutoencoderModel], filepath: Union[str, Path]
) -> None:
    """
    Save a model as an LCAD checkpoint (atomic).

    Args:
        model: Dictionary or AutoencoderModel
        filepath: Destination

    Raises:
        OSError: If the file cannot be written
    """
    atomic_write_bytes(filepath, checkpoint_bytes(model))
    logger.info("Checkpoint written to %s", filepath)


def save_activations(acts: ActivationTensor, stride: int, filepath: Union[str, Path]) -> None:
    """Save a code as an LCAD activation file (kind 2, atomic)."""
    fields = (acts.num_elements, acts.map_height, acts.map_width, stride)
    atomic_write_bytes(filepath, _lcad_bytes(ModelKind.ACTIVATIONS, fields, (acts.data,)))
    logger.info("Activations written to %s", filepath)


def _write_rows(
    filepath: Union[str, Path], columns: Sequence[str], rows: Iterable[Sequence]
) -> None:
    filepath = _ensure_directory(filepath)
    with open(filepath, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    logger.info("Table written to %s", filepath)


def export_train_stats(stats: TrainStats, filepath: Union[str, Path]) -> None:
    """
    Export per-epoch training statistics to CSV.

    Header: ``epoch,mse,energy,percent_active,dict_delta``.

    Raises:
        OSError: If file cannot be written
    """
    _write_rows(
        filepath,
        TRAIN_STATS_COLUMNS,
        (
            [
                str(row.epoch),
                format_float(row.mse),
                format_float(row.energy),
                format_float(row.percent_active),
                format_float(row.dict_delta),
            ]
            for row in stats.rows
        ),
    )


def export_energy_trace(trace: Sequence[float], filepath: Union[str, Path]) -> None:
    """Export an LCA energy trace as ``step,energy`` rows (steps from 1)."""
    _write_rows(
        filepath,
        ENERGY_TRACE_COLUMNS,
        ([str(step), format_float(value)] for step, value in enumerate(trace, start=1)),
    )


def export_histogram_bins(
    edges: np.ndarray, counts: np.ndarray, filepath: Union[str, Path]
) -> None:
    """Export histogram bins as ``bin_left,bin_right,count`` rows."""
    edges = np.asarray(edges, dtype=np.float64)
    counts = np.asarray(counts)
    if edges.size != counts.size + 1:
        raise ValueError(f"{edges.size} edges do not bound {counts.size} bins")
    _write_rows(
        filepath,
        HISTOGRAM_COLUMNS,
        (
            [format_float(edges[i]), format_float(edges[i + 1]), str(int(counts[i]))]
            for i in range(counts.size)
        ),
    )


def export_metrics_report(report: MetricsReport, filepath: Union[str, Path]) -> None:
    """
    Export a MetricsReport as three CSV blocks.

    Each block starts with a ``# <name>`` line and its header row:
    ``summary`` (metric,value), ``per_element`` (k,usage_frequency) and
    ``per_image`` (index,percent_active,intra_mean).

    Raises:
        OSError: If file cannot be written
    """
    filepath = _ensure_directory(filepath)
    with open(filepath, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")

        f.write("# summary\n")
        writer.writerow(REPORT_BLOCKS["summary"])
        for name, value in report.summary():
            writer.writerow([name, format_float(value)])

        f.write("\n# per_element\n")
        writer.writerow(REPORT_BLOCKS["per_element"])
        for k, usage in enumerate(report.usage_frequency_per_element):
            writer.writerow([str(k), format_float(usage)])

        f.write("\n# per_image\n")
        writer.writerow(REPORT_BLOCKS["per_image"])
        for index, (active, intra) in enumerate(
            zip(report.percent_active_per_image, report.intra_mean_per_image)
        ):
            writer.writerow([str(index), format_float(active), format_float(intra)])

    logger.info("Metrics report written to %s", filepath)


def to_uint8(data: np.ndarray) -> np.ndarray:
    """Quantize values in [0, 1] to 8 bits (clipped, rounded half to even)."""
    return np.rint(np.clip(np.asarray(data, dtype=np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)


def write_png(data: np.ndarray, filepath: Union[str, Path]) -> None:
    """
    Write an image in [0, 1] as an 8-bit RGB PNG.

    Single-channel data is replicated to gray RGB. The encoder writes no time or
    text chunks, so equal arrays give equal bytes.

    Args:
        data: Array of shape (height, width) or (height, width, 1 or 3)
        filepath: Destination

    Raises:
        ValueError: On an unsupported shape
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, np.newaxis]
    if data.ndim != 3 or data.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W), (H, W, 1) or (H, W, 3) data, got {data.shape}")
    if data.shape[2] == 1:
        data = np.repeat(data, 3, axis=2)
    height, width = data.shape[:2]
    rows = to_uint8(data).reshape(height, width * 3)

    filepath = _ensure_directory(filepath)
    writer = png.Writer(width=width, height=height, greyscale=False, bitdepth=PNG_BITDEPTH)
    with open(filepath, "wb") as f:
        writer.write(f, rows.tolist())
    logger.info("Image written to %s", filepath)
