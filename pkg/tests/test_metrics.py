"""
Tests for the interpretability metrics.

This module tests:
- Percent active with exact and epsilon thresholds
- Usage frequency
- Intra-image and corpus cross-correlation on hand-worked codes
- Report assembly and its preconditions
- Element matching and response helpers
"""

import numpy as np
import pytest

from src.analysis import (
    MetricsError,
    ModelKind,
    build_report,
    corpus_crosscorr,
    intra_image_crosscorr,
    match_elements,
    percent_active,
    response_similarity,
    top_responses,
    usage_frequency,
)
from src.core import ActivationTensor, Dictionary, DimensionMismatchError
from tests.utils import random_code, random_dictionary


def _single_site(*values):
    return ActivationTensor(np.array(values, dtype=np.float64).reshape(1, 1, -1))


@pytest.fixture
def worked_codes():
    """Pair values [1, 1, 1] for the first image and [0, 2, 0] for the second."""
    return [_single_site(1.0, 1.0, 1.0), _single_site(1.0, 0.0, 2.0)]


class TestPercentActive:
    """Tests for the sparsity fraction."""

    def test_exact_zero_test(self):
        acts = ActivationTensor(np.array([0.0, 1e-15, 0.0, -2.0]).reshape(1, 2, 2))
        assert percent_active(acts) == 0.5

    def test_epsilon_threshold(self):
        acts = ActivationTensor(np.array([0.0, 1e-15, 0.0, -2.0]).reshape(1, 2, 2))
        assert percent_active(acts, 1e-12) == 0.25

    def test_dense_code(self):
        assert percent_active(ActivationTensor(np.ones((2, 2, 3)))) == 1.0

    def test_negative_epsilon(self):
        with pytest.raises(ValueError):
            percent_active(ActivationTensor.zeros(1, 1, 2), -1.0)


class TestUsageFrequency:
    """Tests for per-element usage."""

    def test_counts_over_images_and_sites(self):
        first = np.zeros((1, 2, 2))
        first[0, 0, 0] = 1.0
        first[0, 1, 0] = 3.0
        second = np.zeros((1, 2, 2))
        second[0, 0, 1] = -1.0
        usage = usage_frequency([ActivationTensor(first), ActivationTensor(second)])
        np.testing.assert_allclose(usage, [0.5, 0.25])

    def test_empty(self):
        with pytest.raises(MetricsError):
            usage_frequency([])

    def test_inconsistent_element_counts(self):
        with pytest.raises(MetricsError):
            usage_frequency([ActivationTensor.zeros(1, 1, 2), ActivationTensor.zeros(1, 1, 3)])


class TestCrossCorrelation:
    """Tests for |<map_i, map_j>| statistics."""

    def test_intra_image(self):
        acts = ActivationTensor(np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]).reshape(1, 2, 3))
        mean, std = intra_image_crosscorr(acts)
        assert mean == pytest.approx(2.0 / 3.0)
        assert std == pytest.approx(np.std([0.0, 1.0, 1.0]))

    def test_sign_is_ignored(self):
        positive = intra_image_crosscorr(_single_site(1.0, 2.0))
        negative = intra_image_crosscorr(_single_site(1.0, -2.0))
        assert positive == negative

    def test_orthogonal_maps(self):
        acts = ActivationTensor(np.eye(3).reshape(1, 3, 3))
        assert intra_image_crosscorr(acts) == (0.0, 0.0)

    def test_needs_two_elements(self):
        with pytest.raises(MetricsError):
            intra_image_crosscorr(ActivationTensor.zeros(2, 2, 1))

    def test_corpus_worked_example(self, worked_codes):
        stats = corpus_crosscorr(worked_codes)
        assert stats.mean == pytest.approx(5.0 / 6.0)
        assert stats.intra_std == pytest.approx(np.std([0.0, 2.0, 0.0]) / 2.0)
        assert stats.inter_std == pytest.approx(np.std([1.0, 2.0 / 3.0]))

    def test_corpus_pooled(self, worked_codes):
        stats = corpus_crosscorr(worked_codes, pooled=True)
        assert stats.inter_std == pytest.approx(np.std([1.0, 1.0, 1.0, 0.0, 2.0, 0.0]))
        assert stats.mean == pytest.approx(5.0 / 6.0)

    def test_single_image_has_no_spread_between_images(self):
        stats = corpus_crosscorr([_single_site(1.0, 2.0, 3.0)])
        assert stats.inter_std == 0.0

    def test_scale_is_carried(self):
        base = corpus_crosscorr([_single_site(1.0, 1.0)])
        scaled = corpus_crosscorr([_single_site(3.0, 3.0)])
        assert scaled.mean == pytest.approx(9.0 * base.mean)


class TestBuildReport:
    """Tests for the assembled report."""

    def test_fields(self, worked_codes):
        report = build_report(worked_codes, ModelKind.SPARSE_CODING, weights_normalized=True)
        assert report.num_images == 2
        assert report.percent_active_per_image == (1.0, 2.0 / 3.0)
        assert report.usage_frequency_per_element == (1.0, 0.5, 1.0)
        assert report.intra_mean_per_image == pytest.approx((1.0, 2.0 / 3.0))
        assert report.crosscorr_mean == pytest.approx(5.0 / 6.0)
        assert report.model_kind is ModelKind.SPARSE_CODING

    def test_summary_rows(self, worked_codes):
        report = build_report(worked_codes, ModelKind.AUTOENCODER, True, pooled=True)
        rows = dict(report.summary())
        assert list(rows)[:2] == ["model_kind", "num_images"]
        assert rows["model_kind"] == 1.0
        assert rows["pooled_inter_std"] == 1.0
        assert rows["percent_active_median"] == pytest.approx(5.0 / 6.0)

    @pytest.fixture
    def sparse_codes(self):
        return [random_code(seed, 5, 4, 6, density=0.2) for seed in range(8)]

    def test_usage_accounts_for_every_nonzero(self, sparse_codes):
        report = build_report(sparse_codes, ModelKind.SPARSE_CODING, True)
        total = sum(np.count_nonzero(code.data) for code in sparse_codes)
        sites = sum(code.num_sites for code in sparse_codes)
        assert np.sum(report.usage_frequency_per_element) * sites == pytest.approx(total, abs=1e-9)
        pairs = zip(report.percent_active_per_image, sparse_codes)
        active = sum(fraction * code.data.size for fraction, code in pairs)
        assert active == pytest.approx(total, abs=1e-9)

    def test_element_order_does_not_matter(self, sparse_codes):
        order = np.random.default_rng(3).permutation(6)
        shuffled = [ActivationTensor(code.data[:, :, order]) for code in sparse_codes]
        report = build_report(sparse_codes, ModelKind.SPARSE_CODING, True)
        permuted = build_report(shuffled, ModelKind.SPARSE_CODING, True)
        assert permuted.percent_active_per_image == report.percent_active_per_image
        np.testing.assert_array_equal(
            permuted.usage_frequency_per_element,
            np.array(report.usage_frequency_per_element)[order],
        )
        assert permuted.crosscorr_mean == pytest.approx(report.crosscorr_mean, rel=1e-12)
        assert permuted.crosscorr_intra_std == pytest.approx(report.crosscorr_intra_std, rel=1e-12)
        assert permuted.crosscorr_inter_std == pytest.approx(report.crosscorr_inter_std, rel=1e-12)

    def test_requires_normalized_weights(self, worked_codes):
        with pytest.raises(MetricsError, match="unit-normalized"):
            build_report(worked_codes, ModelKind.SPARSE_CODING, weights_normalized=False)

    def test_empty_corpus(self):
        with pytest.raises(MetricsError):
            build_report([], ModelKind.SPARSE_CODING, True)

    def test_activation_kind_rejected(self, worked_codes):
        with pytest.raises(ValueError):
            build_report(worked_codes, ModelKind.ACTIVATIONS, True)


class TestMatchElements:
    """Tests for the assignment between two dictionaries."""

    def test_recovers_permutation_and_sign(self):
        dictionary = random_dictionary(0, 6, 3, 2, 1)
        order = np.array([4, 2, 0, 5, 1, 3])
        flipped = dictionary.elements[order] * np.array([1, -1, 1, 1, -1, 1]).reshape(-1, 1, 1, 1)
        pairs = match_elements(dictionary, Dictionary(flipped, 1))
        assert sorted((i, j) for i, j, _ in pairs) == sorted(
            (int(order[j]), j) for j in range(6)
        )
        assert all(value == pytest.approx(1.0) for _, _, value in pairs)

    def test_sorted_by_similarity(self):
        pairs = match_elements(random_dictionary(1, 5, 2, 1, 1), random_dictionary(2, 5, 2, 1, 1))
        values = [value for _, _, value in pairs]
        assert values == sorted(values, reverse=True)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            match_elements(random_dictionary(0, 3, 2, 1, 1), random_dictionary(0, 3, 3, 1, 1))


class TestResponses:
    """Tests for per-element response helpers."""

    def test_similarity(self):
        maps = np.stack([[[1.0, 0.0], [0.0, 1.0]], [[2.0, 0.0], [0.0, 2.0]]], axis=-1)
        acts = ActivationTensor(maps)
        assert response_similarity(acts, 0, 1) == pytest.approx(1.0)

    def test_similarity_with_empty_map(self):
        acts = ActivationTensor(np.stack([np.ones((2, 2)), np.zeros((2, 2))], axis=-1))
        assert response_similarity(acts, 0, 1) == 0.0

    def test_top_responses(self):
        values = np.zeros((2, 3, 1))
        values[0, 2, 0] = -5.0
        values[1, 0, 0] = 2.0
        top = top_responses(ActivationTensor(values), 0, 3)
        assert top == [(0, 2, -5.0), (1, 0, 2.0)]

    def test_top_responses_bad_element(self):
        with pytest.raises(IndexError):
            top_responses(ActivationTensor.zeros(2, 2, 2), 2, 1)
