"""
Input/Output module for loading and saving data.

This module contains functions for:
- Reading and writing PNG images
- Saving and loading LCAD checkpoints and activation files
- Exporting training statistics, energy traces, reports and histograms (CSV)
- Data validation
- File format constants
"""

from .loaders import (
    DataLoadError,
    CheckpointError,
    read_png,
    read_kind,
    load_checkpoint,
    load_activations,
    load_train_stats,
    load_energy_trace,
    load_report_blocks,
)
from .validators import (
    validate_geometry,
    validate_manifest,
    validate_image_array,
    validate_kind,
    validate_unit_norm,
)
from .formats import (
    MAGIC,
    FORMAT_VERSION,
    HEADER,
    KIND_NAMES,
    TRAIN_STATS_COLUMNS,
    ENERGY_TRACE_COLUMNS,
    HISTOGRAM_COLUMNS,
    REPORT_BLOCKS,
    format_float,
)
from .exporters import (
    atomic_write_bytes,
    checkpoint_bytes,
    save_checkpoint,
    save_activations,
    export_train_stats,
    export_energy_trace,
    export_histogram_bins,
    export_metrics_report,
    to_uint8,
    write_png,
)

__all__ = [
    # Loaders
    "DataLoadError",
    "CheckpointError",
    "read_png",
    "read_kind",
    "load_checkpoint",
    "load_activations",
    "load_train_stats",
    "load_energy_trace",
    "load_report_blocks",
    # Validators
    "validate_geometry",
    "validate_manifest",
    "validate_image_array",
    "validate_kind",
    "validate_unit_norm",
    # Formats
    "MAGIC",
    "FORMAT_VERSION",
    "HEADER",
    "KIND_NAMES",
    "TRAIN_STATS_COLUMNS",
    "ENERGY_TRACE_COLUMNS",
    "HISTOGRAM_COLUMNS",
    "REPORT_BLOCKS",
    "format_float",
    # Exporters
    "atomic_write_bytes",
    "checkpoint_bytes",
    "save_checkpoint",
    "save_activations",
    "export_train_stats",
    "export_energy_trace",
    "export_histogram_bins",
    "export_metrics_report",
    "to_uint8",
    "write_png",
]
