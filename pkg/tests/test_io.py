"""
Tests for input/output functionality.

This module tests:
- LCAD checkpoints and activation files
- CSV export and loading (training statistics, energy traces, reports, histograms)
- PNG writing
- Data validation functions
- Error handling
"""

import os
import shutil
import struct
import tempfile
from pathlib import Path

import numpy as np
import pytest

from src.analysis import ModelKind, build_report
from src.autoencoder import AutoencoderModel, init_autoencoder
from src.core import ActivationTensor
from src.corpus import CorpusManifest, ManifestEntry, SynthSpec
from src.io import (
    HEADER,
    CheckpointError,
    DataLoadError,
    checkpoint_bytes,
    export_energy_trace,
    export_histogram_bins,
    export_metrics_report,
    export_train_stats,
    format_float,
    load_activations,
    load_checkpoint,
    load_energy_trace,
    load_report_blocks,
    load_train_stats,
    read_kind,
    read_png,
    save_activations,
    save_checkpoint,
    to_uint8,
    validate_geometry,
    validate_image_array,
    validate_kind,
    validate_manifest,
    validate_unit_norm,
    write_png,
)
from src.sparse_coding import EpochStats, TrainStats
from tests.utils import random_code, random_dictionary


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    temp_dir = tempfile.mkdtemp()
    yield Path(temp_dir)
    shutil.rmtree(temp_dir)


class TestCheckpoints:
    """Tests for LCAD model files."""

    def test_header_layout(self):
        data = checkpoint_bytes(random_dictionary(0, 2, 2, 1, 2))
        assert data[:4] == b"LCAD"
        assert struct.unpack("<I", data[4:8]) == (1,)
        assert data[8] == 0
        assert struct.unpack("<4I", data[9:25]) == (2, 2, 1, 2)
        assert len(data) == HEADER.size + 8 * 8

    def test_dictionary_round_trip(self, temp_dir):
        dictionary = random_dictionary(1, 4, 3, 3, 2)
        save_checkpoint(dictionary, temp_dir / "sc.lcad")
        loaded = load_checkpoint(temp_dir / "sc.lcad")
        np.testing.assert_array_equal(loaded.elements, dictionary.elements)
        assert loaded.stride == 2
        assert read_kind(temp_dir / "sc.lcad") is ModelKind.SPARSE_CODING

    def test_autoencoder_round_trip(self, temp_dir):
        base = init_autoencoder(0, 3, 2, 1, 2)
        model = AutoencoderModel(base.encoder, np.array([0.1, -0.2, 0.3]), base.decoder)
        save_checkpoint(model, temp_dir / "ae.lcad")
        loaded = load_checkpoint(temp_dir / "ae.lcad")
        assert isinstance(loaded, AutoencoderModel)
        np.testing.assert_array_equal(loaded.parameters(), model.parameters())
        assert (temp_dir / "ae.lcad").read_bytes()[8] == 1

    def test_identical_models_give_identical_bytes(self, temp_dir):
        save_checkpoint(random_dictionary(2, 2, 2, 1, 2), temp_dir / "a.lcad")
        save_checkpoint(random_dictionary(2, 2, 2, 1, 2), temp_dir / "b.lcad")
        assert (temp_dir / "a.lcad").read_bytes() == (temp_dir / "b.lcad").read_bytes()

    def test_no_temporary_files_left(self, temp_dir):
        save_checkpoint(random_dictionary(0, 2, 2, 1, 2), temp_dir / "out" / "sc.lcad")
        assert os.listdir(temp_dir / "out") == ["sc.lcad"]

    def test_bad_magic(self, temp_dir):
        data = bytearray(checkpoint_bytes(random_dictionary(0, 2, 2, 1, 2)))
        data[:4] = b"NOPE"
        (temp_dir / "bad.lcad").write_bytes(bytes(data))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(temp_dir / "bad.lcad")

    def test_bad_version(self, temp_dir):
        data = bytearray(checkpoint_bytes(random_dictionary(0, 2, 2, 1, 2)))
        data[4:8] = struct.pack("<I", 7)
        (temp_dir / "v7.lcad").write_bytes(bytes(data))
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(temp_dir / "v7.lcad")

    def test_truncated_payload(self, temp_dir):
        data = checkpoint_bytes(random_dictionary(0, 2, 2, 1, 2))
        (temp_dir / "short.lcad").write_bytes(data[:-8])
        with pytest.raises(CheckpointError, match="payload"):
            load_checkpoint(temp_dir / "short.lcad")

    def test_ragged_payload(self, temp_dir):
        data = checkpoint_bytes(random_dictionary(0, 2, 2, 1, 2))
        (temp_dir / "ragged.lcad").write_bytes(data + b"\x00\x01\x02")
        with pytest.raises(CheckpointError, match="payload"):
            load_checkpoint(temp_dir / "ragged.lcad")

    def test_short_header(self, temp_dir):
        (temp_dir / "tiny.lcad").write_bytes(b"LCAD")
        with pytest.raises(CheckpointError):
            load_checkpoint(temp_dir / "tiny.lcad")

    def test_activation_file_is_not_a_model(self, temp_dir):
        save_activations(ActivationTensor.zeros(2, 2, 3), 4, temp_dir / "acts.lcad")
        with pytest.raises(CheckpointError, match="not a model"):
            load_checkpoint(temp_dir / "acts.lcad")

    def test_missing_file(self, temp_dir):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(temp_dir / "absent.lcad")

    def test_unsupported_model(self):
        with pytest.raises(TypeError):
            checkpoint_bytes(np.zeros(3))


class TestActivationFiles:
    """Tests for LCAD activation files."""

    def test_round_trip(self, temp_dir):
        acts = random_code(0, 3, 5, 4, density=0.3)
        save_activations(acts, 2, temp_dir / "acts.lcad")
        loaded, stride = load_activations(temp_dir / "acts.lcad")
        np.testing.assert_array_equal(loaded.data, acts.data)
        assert stride == 2

    def test_header_fields(self, temp_dir):
        save_activations(ActivationTensor.zeros(3, 5, 4), 2, temp_dir / "acts.lcad")
        data = (temp_dir / "acts.lcad").read_bytes()
        assert data[8] == 2
        assert struct.unpack("<4I", data[9:25]) == (4, 3, 5, 2)

    def test_model_file_is_not_activations(self, temp_dir):
        save_checkpoint(random_dictionary(0, 2, 2, 1, 2), temp_dir / "sc.lcad")
        with pytest.raises(CheckpointError, match="not activations"):
            load_activations(temp_dir / "sc.lcad")

    @pytest.mark.parametrize("trim", [1, 3, 8])
    def test_truncated_payload(self, temp_dir, trim):
        save_activations(random_code(1, 2, 2, 3), 4, temp_dir / "acts.lcad")
        data = (temp_dir / "acts.lcad").read_bytes()
        (temp_dir / "short.lcad").write_bytes(data[:-trim])
        with pytest.raises(CheckpointError, match="payload"):
            load_activations(temp_dir / "short.lcad")


class TestTables:
    """Tests for the CSV writers and readers."""

    def test_train_stats_round_trip(self, temp_dir):
        stats = TrainStats()
        stats.append(EpochStats(1, 0.1, 2.0 / 3.0, 0.05, 1e-300))
        stats.append(EpochStats(2, 0.09, 0.6, 0.04, 0.5))
        export_train_stats(stats, temp_dir / "stats.csv")
        lines = (temp_dir / "stats.csv").read_text().splitlines()
        assert lines[0] == "epoch,mse,energy,percent_active,dict_delta"
        loaded = load_train_stats(temp_dir / "stats.csv")
        assert loaded.rows == stats.rows

    def test_train_stats_wrong_header(self, temp_dir):
        (temp_dir / "bad.csv").write_text("epoch,loss\n1,0.5\n")
        with pytest.raises(DataLoadError, match="header"):
            load_train_stats(temp_dir / "bad.csv")

    def test_train_stats_short_row(self, temp_dir):
        (temp_dir / "bad.csv").write_text("epoch,mse,energy,percent_active,dict_delta\n1,0.5\n")
        with pytest.raises(DataLoadError, match="columns"):
            load_train_stats(temp_dir / "bad.csv")

    def test_energy_trace(self, temp_dir):
        export_energy_trace([3.0, 2.5, 2.25], temp_dir / "trace.csv")
        lines = (temp_dir / "trace.csv").read_text().splitlines()
        assert lines == ["step,energy", "1,3", "2,2.5", "3,2.25"]
        np.testing.assert_array_equal(load_energy_trace(temp_dir / "trace.csv"), [3.0, 2.5, 2.25])

    def test_histogram_bins(self, temp_dir):
        export_histogram_bins(np.array([0.0, 0.5, 1.0]), np.array([3, 1]), temp_dir / "h.csv")
        lines = (temp_dir / "h.csv").read_text().splitlines()
        assert lines == ["bin_left,bin_right,count", "0,0.5,3", "0.5,1,1"]

    def test_histogram_edge_count(self, temp_dir):
        with pytest.raises(ValueError):
            export_histogram_bins(np.arange(3.0), np.array([1]), temp_dir / "h.csv")

    def test_float_format_round_trips(self):
        for value in (0.1, 1.0 / 3.0, 2.0**-1074, 1e300):
            assert float(format_float(value)) == value

    def test_metrics_report_blocks(self, temp_dir):
        codes = [
            ActivationTensor(np.array([1.0, 1.0, 1.0]).reshape(1, 1, 3)),
            ActivationTensor(np.array([1.0, 0.0, 2.0]).reshape(1, 1, 3)),
        ]
        report = build_report(codes, ModelKind.SPARSE_CODING, weights_normalized=True)
        export_metrics_report(report, temp_dir / "report.csv")
        blocks = load_report_blocks(temp_dir / "report.csv")
        assert list(blocks) == ["summary", "per_element", "per_image"]
        summary = {row["metric"]: float(row["value"]) for row in blocks["summary"]}
        assert summary["crosscorr_mean"] == report.crosscorr_mean
        assert [row["usage_frequency"] for row in blocks["per_element"]] == ["1", "0.5", "1"]
        assert len(blocks["per_image"]) == 2

    def test_report_unknown_block(self, temp_dir):
        (temp_dir / "r.csv").write_text("# extras\nmetric,value\n")
        with pytest.raises(DataLoadError, match="unknown block"):
            load_report_blocks(temp_dir / "r.csv")


class TestPng:
    """Tests for PNG output."""

    def test_round_trip(self, temp_dir):
        data = np.random.default_rng(0).uniform(size=(5, 7, 3))
        write_png(data, temp_dir / "img.png")
        decoded = read_png(temp_dir / "img.png")
        assert decoded.shape == (5, 7, 3)
        np.testing.assert_array_equal(decoded, to_uint8(data) / 255.0)

    def test_gray_written_as_rgb(self, temp_dir):
        write_png(np.full((3, 3), 0.5), temp_dir / "gray.png")
        assert read_png(temp_dir / "gray.png").shape == (3, 3, 3)

    def test_deterministic_bytes(self, temp_dir):
        data = np.linspace(0.0, 1.0, 48).reshape(4, 4, 3)
        write_png(data, temp_dir / "a.png")
        write_png(data, temp_dir / "b.png")
        assert (temp_dir / "a.png").read_bytes() == (temp_dir / "b.png").read_bytes()

    def test_quantization_clips(self):
        np.testing.assert_array_equal(to_uint8(np.array([-1.0, 0.5, 2.0])), [0, 128, 255])

    def test_bad_shape(self, temp_dir):
        with pytest.raises(ValueError):
            write_png(np.zeros((2, 2, 4)), temp_dir / "x.png")


class TestValidateGeometry:
    """Tests for geometry validation."""

    def test_valid(self):
        assert validate_geometry(64, 64, 8, 4) == (True, [])

    def test_stride_does_not_tile(self):
        is_valid, errors = validate_geometry(64, 62, 8, 4)
        assert not is_valid
        assert errors == ["Stride 4 does not divide image width 62 minus patch 8"]

    def test_patch_too_large(self):
        is_valid, errors = validate_geometry(4, 4, 8, 4)
        assert not is_valid
        assert len(errors) == 2

    def test_non_positive(self):
        is_valid, errors = validate_geometry(64, 64, 0, 4)
        assert not is_valid
        assert "Patch" in errors[0]


class TestValidateOther:
    """Tests for the remaining validators."""

    def test_manifest_missing_file(self, temp_dir):
        manifest = CorpusManifest(
            entries=(ManifestEntry(path=temp_dir / "gone.png"), ManifestEntry(spec=SynthSpec(1)))
        )
        is_valid, errors = validate_manifest(manifest, patch=8, stride=4)
        assert not is_valid
        assert errors == [f"Entry 0: file not found: {temp_dir / 'gone.png'}"]

    def test_manifest_geometry(self):
        manifest = CorpusManifest(entries=(ManifestEntry(spec=SynthSpec(1)),), target_width=62)
        is_valid, errors = validate_manifest(manifest, patch=8, stride=4)
        assert not is_valid
        assert errors[0].startswith("Manifest size:")

    def test_image_array(self):
        assert validate_image_array(np.zeros((2, 2, 3))) == (True, [])
        is_valid, errors = validate_image_array(np.zeros((2, 2, 2)))
        assert not is_valid and "gray+alpha" in errors[0]
        assert not validate_image_array(np.full((2, 2, 1), 1.5))[0]
        assert not validate_image_array(np.zeros((2, 2)))[0]

    def test_kind(self):
        assert validate_kind(ModelKind.AUTOENCODER, [ModelKind.AUTOENCODER]) == (True, [])
        is_valid, errors = validate_kind(ModelKind.ACTIVATIONS, [ModelKind.SPARSE_CODING])
        assert not is_valid
        assert errors == ["Expected a sparse-coding file, got activations"]

    def test_unit_norm(self):
        assert validate_unit_norm(np.ones(4)) == (True, [])
        is_valid, errors = validate_unit_norm(np.array([1.0, 0.5]))
        assert not is_valid
        assert errors == ["Element 1 has norm 0.5, expected 1"]
