"""
Integration tests for complete training and analysis workflows.

Tests the end-to-end functionality of the toolkit:
- Corpus synthesis and preprocessing
- Dictionary learning and autoencoder training at desk-scale defaults
- Encoding a corpus with both models
- Interpretability metrics of the two codes
- Checkpoint and report round trips
"""

import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # Use non-interactive backend for testing

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from src.analysis import ModelKind, build_report  # noqa: E402
from src.autoencoder import ae_forward, train_autoencoder  # noqa: E402
from src.config import AeTrainConfig, Geometry, LcaConfig, TrainConfig  # noqa: E402
from src.corpus import (  # noqa: E402
    CorpusManifest,
    ManifestEntry,
    build_corpus,
    load_manifest,
    random_spec,
    write_manifest,
)
from src.io import (  # noqa: E402
    export_metrics_report,
    load_checkpoint,
    load_report_blocks,
    save_checkpoint,
)
from src.sparse_coding import encode_batch, train_dictionary  # noqa: E402

DESK_IMAGES = 40
SMALL_GEOMETRY = Geometry(
    image_height=32, image_width=32, channels=3, patch=8, stride=4, num_elements=16
)
SMALL_LCA = LcaConfig(lam=0.1, max_steps=300, tolerance=1e-5)


def _synth_manifest(count, size):
    return CorpusManifest(
        entries=tuple(ManifestEntry(spec=random_spec(0, i)) for i in range(count)),
        target_height=size,
        target_width=size,
    )


@pytest.fixture(scope="module")
def small_corpus():
    """Eight 32x32 synthetic charts, mean-subtracted."""
    return build_corpus(_synth_manifest(8, 32), threads=2)


@pytest.fixture(scope="module")
def desk_corpus():
    """Forty 64x64 synthetic charts at the default geometry."""
    return build_corpus(_synth_manifest(DESK_IMAGES, 64))


@pytest.fixture(scope="module")
def sparse_coding_run(desk_corpus):
    return train_dictionary(desk_corpus, TrainConfig())


@pytest.fixture(scope="module")
def autoencoder_run(desk_corpus):
    return train_autoencoder(desk_corpus, AeTrainConfig())


@pytest.fixture(scope="module")
def reports(desk_corpus, sparse_coding_run, autoencoder_run):
    dictionary, _ = sparse_coding_run
    model = autoencoder_run[0].normalized()
    sc_codes = [state.a for state in encode_batch(desk_corpus, dictionary, LcaConfig())]
    ae_codes = [ae_forward(image, model)[0] for image in desk_corpus]
    return (
        build_report(sc_codes, ModelKind.SPARSE_CODING, weights_normalized=True),
        build_report(ae_codes, ModelKind.AUTOENCODER, weights_normalized=True),
    )


@pytest.mark.slow
class TestDefaultTraining:
    """Both models learn on the synthetic corpus with the shipped defaults."""

    def test_dictionary_reduces_error_by_thirty_percent(self, sparse_coding_run):
        _, stats = sparse_coding_run
        assert stats.epochs_completed == 20
        assert stats.mse[-1] <= 0.7 * stats.mse[0]

    def test_autoencoder_halves_error(self, autoencoder_run):
        _, stats = autoencoder_run
        assert stats.epochs_completed == 50
        assert stats.mse[-1] <= 0.5 * stats.mse[0]

    def test_autoencoder_loss_descends_with_fixed_noise(self, desk_corpus):
        cfg = AeTrainConfig(epochs=10, resample_noise=False)
        _, stats = train_autoencoder(desk_corpus, cfg)
        assert np.all(np.diff(stats.mse) <= 0.0)


@pytest.mark.slow
class TestInterpretabilityComparison:
    """Sparse codes are sparser and less cross-correlated than autoencoder codes."""

    def test_sparse_codes_are_sparse(self, reports):
        sc_report, _ = reports
        assert 0.005 <= sc_report.median_percent_active <= 0.10

    def test_autoencoder_codes_are_dense(self, reports):
        _, ae_report = reports
        exact_zeros = 1.0 - np.array(ae_report.percent_active_per_image)
        assert np.all(exact_zeros < 0.01)

    def test_crosscorrelation_is_lower_for_sparse_codes(self, reports):
        sc_report, ae_report = reports
        assert sc_report.crosscorr_mean <= 0.2 * ae_report.crosscorr_mean

    def test_report_files(self, reports):
        with tempfile.TemporaryDirectory() as temp_dir:
            for report in reports:
                path = Path(temp_dir) / f"{report.model_kind.name.lower()}.csv"
                export_metrics_report(report, path)
                blocks = load_report_blocks(path)
                assert len(blocks["per_image"]) == DESK_IMAGES
                assert len(blocks["per_element"]) == 64


@pytest.mark.slow
class TestSparseCodingWorkflow:
    """Train a dictionary, save it, reload it and encode with it."""

    def test_checkpoint_round_trip_keeps_codes(self, small_corpus):
        cfg = TrainConfig(lca=SMALL_LCA, epochs=1, batch_size=4)
        dictionary, _ = train_dictionary(small_corpus, cfg, geometry=SMALL_GEOMETRY)
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "sc.lcad"
            save_checkpoint(dictionary, path)
            loaded = load_checkpoint(path)
        before = encode_batch(small_corpus[:2], dictionary, SMALL_LCA, threads=1)
        after = encode_batch(small_corpus[:2], loaded, SMALL_LCA, threads=1)
        for first, second in zip(before, after):
            np.testing.assert_array_equal(first.a.data, second.a.data)


@pytest.mark.slow
def test_manifest_round_trip_rebuilds_same_corpus(small_corpus):
    manifest = _synth_manifest(8, 32)
    with tempfile.TemporaryDirectory() as temp_dir:
        path = Path(temp_dir) / "manifest.txt"
        write_manifest(manifest, path)
        rebuilt = build_corpus(load_manifest(path), threads=1)
    for first, second in zip(small_corpus, rebuilt):
        np.testing.assert_array_equal(first.data, second.data)
