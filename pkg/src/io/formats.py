"""
Data format constants for model and report files.

This module defines the binary layouts (checkpoints, activation files), the
CSV schemas and the PNG conventions used by the toolkit.

Binary files (little-endian):
    header = magic "LCAD" | version u32 | kind u8 | four u32 fields
    kind 0 (sparse coding):  fields K, patch, channels, stride;
                             then K*patch*patch*channels float64 (element-major)
    kind 1 (autoencoder):    same fields; encoder block, decoder block, K biases
    kind 2 (activations):    fields K, map_height, map_width, stride;
                             then map_height*map_width*K float64 (row-major)
"""

import struct
from typing import Dict, List

from ..config import ModelKind

# Binary header
MAGIC = b"LCAD"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIB4I")
FLOAT_DTYPE = "<f8"

KIND_NAMES = {
    ModelKind.SPARSE_CODING: "sparse-coding",
    ModelKind.AUTOENCODER: "autoencoder",
    ModelKind.ACTIVATIONS: "activations",
}

# CSV schemas
TRAIN_STATS_COLUMNS = ["epoch", "mse", "energy", "percent_active", "dict_delta"]
ENERGY_TRACE_COLUMNS = ["step", "energy"]
HISTOGRAM_COLUMNS = ["bin_left", "bin_right", "count"]
REPORT_BLOCKS: Dict[str, List[str]] = {
    "summary": ["metric", "value"],
    "per_element": ["k", "usage_frequency"],
    "per_image": ["index", "percent_active", "intra_mean"],
}

# Full round-trip precision for float64 in text
CSV_FLOAT_FORMAT = ".17g"

# PNG conventions
PNG_BITDEPTH = 8
SUPPORTED_PLANES = (1, 3)


def format_float(value: float) -> str:
    """Text form of a float that parses back to the same value."""
    return format(float(value), CSV_FLOAT_FORMAT)
