"""
Interpretability metrics for activation codes.

Quantities computed here:
- percent_active: fraction of nonzero coefficients in one code
- usage_frequency: how often each element is active across a corpus
- intra_image_crosscorr: |<map_i, map_j>| over element pairs of one code
- corpus_crosscorr: mean, within-image spread and across-image spread of the
  pair values over a corpus
- match_elements / response_similarity / top_responses: element-level
  comparisons between models and inputs

Cross-correlation is the absolute zero-lag inner product of flattened activation
maps. It carries the scale of the codes, so the weights of both models must be
unit-normalized before encoding for the statistics to be comparable.
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..config import AE_ACTIVE_EPSILON, ModelKind
from ..core import ActivationTensor, Dictionary, DimensionMismatchError

logger = logging.getLogger(__name__)


class MetricsError(ValueError):
    """Exception raised when a metric's preconditions are not met."""


class CrossCorrStats(NamedTuple):
    """Corpus cross-correlation summary."""

    mean: float
    intra_std: float
    inter_std: float


@dataclass(frozen=True)
class MetricsReport:
    """
    Interpretability summary of one model on one corpus.

    Attributes:
        percent_active_per_image: Fraction of exactly nonzero entries per image
        percent_active_eps: Fraction of entries with |a| > 1e-12 per image
        usage_frequency_per_element: Usage fraction of each element (K values)
        intra_mean_per_image: Mean pair cross-correlation of each image
        crosscorr_mean: Grand mean of all pair values
        crosscorr_intra_std: Mean over images of the within-image std
        crosscorr_inter_std: Std over images of the per-image mean
        model_kind: Which model produced the codes
        pooled_inter_std: Whether inter_std was taken over pooled pair values
    """

    percent_active_per_image: Tuple[float, ...]
    percent_active_eps: Tuple[float, ...]
    usage_frequency_per_element: Tuple[float, ...]
    intra_mean_per_image: Tuple[float, ...]
    crosscorr_mean: float
    crosscorr_intra_std: float
    crosscorr_inter_std: float
    model_kind: ModelKind
    pooled_inter_std: bool = False

    def __post_init__(self):
        fractions = (
            "percent_active_per_image",
            "percent_active_eps",
            "usage_frequency_per_element",
        )
        for name in fractions:
            values = np.asarray(getattr(self, name), dtype=np.float64)
            if values.size and (values.min() < 0.0 or values.max() > 1.0):
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("crosscorr_mean", "crosscorr_intra_std", "crosscorr_inter_std"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")
        kind = ModelKind(self.model_kind)
        if kind is ModelKind.ACTIVATIONS:
            raise ValueError("model_kind must name a model, not an activation file")
        object.__setattr__(self, "model_kind", kind)

    @property
    def num_images(self) -> int:
        return len(self.percent_active_per_image)

    @property
    def median_percent_active(self) -> float:
        return float(np.median(self.percent_active_per_image))

    def summary(self) -> List[Tuple[str, float]]:
        """(metric, value) rows of the summary block."""
        return [
            ("model_kind", float(int(self.model_kind))),
            ("num_images", float(self.num_images)),
            ("percent_active_mean", float(np.mean(self.percent_active_per_image))),
            ("percent_active_median", self.median_percent_active),
            ("percent_active_eps_mean", float(np.mean(self.percent_active_eps))),
            ("usage_frequency_mean", float(np.mean(self.usage_frequency_per_element))),
            ("crosscorr_mean", self.crosscorr_mean),
            ("crosscorr_intra_std", self.crosscorr_intra_std),
            ("crosscorr_inter_std", self.crosscorr_inter_std),
            ("pooled_inter_std", float(self.pooled_inter_std)),
        ]


def percent_active(acts: ActivationTensor, epsilon: float = 0.0) -> float:
    """
    Fraction of entries with |value| > epsilon.

    The default epsilon of 0 is an exact zero test.

    Example:
        >>> percent_active(ActivationTensor.zeros(2, 2, 3))
        0.0
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    data = acts.data
    return float(np.count_nonzero(np.abs(data) > epsilon)) / data.size


def _check_codes(codes: Sequence[ActivationTensor]) -> None:
    if len(codes) == 0:
        raise MetricsError("no codes given (empty corpus)")
    counts = {code.num_elements for code in codes}
    if len(counts) != 1:
        raise MetricsError(f"codes disagree on the number of elements: {sorted(counts)}")


def usage_frequency(codes: Sequence[ActivationTensor]) -> np.ndarray:
    """
    Per-element usage: active (image, site) pairs over all (image, site) pairs.

    Raises:
        MetricsError: On an empty sequence or inconsistent K
    """
    _check_codes(codes)
    active = np.zeros(codes[0].num_elements, dtype=np.int64)
    sites = 0
    for code in codes:
        active += np.count_nonzero(code.data, axis=(0, 1))
        sites += code.num_sites
    return active / sites


def _pair_values(acts: ActivationTensor) -> np.ndarray:
    if acts.num_elements < 2:
        raise MetricsError(f"cross-correlation needs K >= 2, got {acts.num_elements}")
    flat = acts.data.reshape(-1, acts.num_elements)
    gram = flat.T @ flat
    upper = np.triu_indices(acts.num_elements, k=1)
    return np.abs(gram[upper])


def intra_image_crosscorr(acts: ActivationTensor) -> Tuple[float, float]:
    """
    Mean and (population) std of |<map_i, map_j>| over the K(K-1)/2 pairs i < j.

    Raises:
        MetricsError: If K < 2

    Example:
        >>> maps = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]).reshape(1, 2, 3)
        >>> intra_image_crosscorr(ActivationTensor(maps))[0]
        0.6666666666666666
    """
    values = _pair_values(acts)
    return float(np.mean(values)), float(np.std(values))


def corpus_crosscorr(codes: Sequence[ActivationTensor], pooled: bool = False) -> CrossCorrStats:
    """
    Cross-correlation statistics over a corpus of codes.

    - mean: grand mean of every pair value of every image
    - intra_std: mean over images of the within-image std
    - inter_std: std over images of the per-image mean; with ``pooled`` the std
      of all pair values of all images taken together

    Codes must come from unit-normalized weights; that is the caller's job
    (see :func:`build_report`).

    Raises:
        MetricsError: On an empty corpus, inconsistent K or K < 2
    """
    _check_codes(codes)
    per_image = [_pair_values(code) for code in codes]
    means = np.array([values.mean() for values in per_image])
    stds = np.array([values.std() for values in per_image])
    pooled_values = np.concatenate(per_image)
    inter = float(np.std(pooled_values)) if pooled else float(np.std(means))
    return CrossCorrStats(
        mean=float(np.mean(pooled_values)),
        intra_std=float(np.mean(stds)),
        inter_std=inter,
    )


def build_report(
    codes: Sequence[ActivationTensor],
    model_kind: ModelKind,
    weights_normalized: bool,
    pooled: bool = False,
) -> MetricsReport:
    """
    Full MetricsReport for codes of one model.

    Raises:
        MetricsError: If the weights were not unit-normalized before encoding, or
            the codes are empty or inconsistent
    """
    if not weights_normalized:
        raise MetricsError(
            "cross-correlation needs codes from unit-normalized weights; normalize the model first"
        )
    _check_codes(codes)
    stats = corpus_crosscorr(codes, pooled=pooled)
    report = MetricsReport(
        percent_active_per_image=tuple(percent_active(code) for code in codes),
        percent_active_eps=tuple(percent_active(code, AE_ACTIVE_EPSILON) for code in codes),
        usage_frequency_per_element=tuple(float(v) for v in usage_frequency(codes)),
        intra_mean_per_image=tuple(intra_image_crosscorr(code)[0] for code in codes),
        crosscorr_mean=stats.mean,
        crosscorr_intra_std=stats.intra_std,
        crosscorr_inter_std=stats.inter_std,
        model_kind=model_kind,
        pooled_inter_std=pooled,
    )
    logger.info(
        "%s report over %d images: crosscorr mean %.6g, median active %.4f",
        ModelKind(model_kind).name.lower(),
        report.num_images,
        report.crosscorr_mean,
        report.median_percent_active,
    )
    return report


def match_elements(dict_a: Dictionary, dict_b: Dictionary) -> List[Tuple[int, int, float]]:
    """
    Pair elements of two dictionaries by |cosine similarity|.

    Solves the assignment problem that maximizes the total |cosine| over pairs.

    Returns:
        (index in a, index in b, |cosine|) triples, sorted by decreasing similarity

    Raises:
        DimensionMismatchError: If the element shapes differ
    """
    if dict_a.elements.shape[1:] != dict_b.elements.shape[1:]:
        raise DimensionMismatchError(
            f"element shapes differ: {dict_a.elements.shape[1:]} vs {dict_b.elements.shape[1:]}"
        )
    flat_a = dict_a.normalized().elements.reshape(dict_a.num_elements, -1)
    flat_b = dict_b.normalized().elements.reshape(dict_b.num_elements, -1)
    similarity = np.abs(flat_a @ flat_b.T)
    rows, cols = linear_sum_assignment(similarity, maximize=True)
    pairs = [(int(i), int(j), float(similarity[i, j])) for i, j in zip(rows, cols)]
    return sorted(pairs, key=lambda pair: (-pair[2], pair[0]))


def response_similarity(acts: ActivationTensor, i: int, j: int) -> float:
    """
    Normalized zero-lag correlation <map_i, map_j> / (||map_i|| ||map_j||).

    Returns 0 when either map is all zeros.
    """
    map_i = acts.element_map(i).ravel()
    map_j = acts.element_map(j).ravel()
    denom = float(np.linalg.norm(map_i) * np.linalg.norm(map_j))
    if denom == 0.0:
        return 0.0
    return float(map_i @ map_j) / denom


def top_responses(acts: ActivationTensor, k: int, n: int) -> List[Tuple[int, int, float]]:
    """
    The ``n`` sites where element ``k`` responds most strongly.

    Returns:
        (row, col, value) triples by decreasing |value|; zero sites are skipped
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    values = acts.element_map(k)
    flat = values.ravel()
    order = np.argsort(-np.abs(flat), kind="stable")[:n]
    rows, cols = np.unravel_index(order, values.shape)
    return [
        (int(r), int(c), float(values[r, c])) for r, c in zip(rows, cols) if values[r, c] != 0.0
    ]
