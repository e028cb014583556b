"""
Corpus module.

This module contains:
- Deterministic synthetic information graphics (line and bar charts)
- Manifest parsing and writing
- PNG ingestion, bilinear resizing and mean subtraction
- Corpus assembly in manifest order
"""

from .synth import (
    SynthSpec,
    DEFAULT_PALETTE,
    STYLE_FLAGS,
    random_spec,
    synth_graphic,
)
from .pipeline import (
    CorpusBuildError,
    ManifestEntry,
    CorpusManifest,
    parse_synth_token,
    parse_manifest,
    load_manifest,
    format_manifest,
    write_manifest,
    resize_bilinear,
    load_image,
    preprocess,
    build_corpus,
)

__all__ = [
    # Synthetic graphics
    "SynthSpec",
    "DEFAULT_PALETTE",
    "STYLE_FLAGS",
    "random_spec",
    "synth_graphic",
    # Manifests and ingestion
    "CorpusBuildError",
    "ManifestEntry",
    "CorpusManifest",
    "parse_synth_token",
    "parse_manifest",
    "load_manifest",
    "format_manifest",
    "write_manifest",
    "resize_bilinear",
    "load_image",
    "preprocess",
    "build_corpus",
]
