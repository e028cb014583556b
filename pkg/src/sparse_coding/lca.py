"""
Locally Competitive Algorithm (LCA) for convolutional sparse inference.

For a fixed dictionary Phi the solver looks for a sparse code a that minimizes

    E(a) = 1/2 ||x - Phi a||^2 + lambda ||a||_1

by integrating the leaky-integrator dynamics of the membrane potentials u:

    du/dt = -u + Phi^T x - (Phi^T Phi a - a),     a = T_lambda(u)

Physical picture:
- The Phi^T x drive charges each unit by how well its element matches the input
- Active units inhibit the others in proportion to element overlap (Phi^T Phi a)
- The "- a" term removes each unit's inhibition of itself
- Units whose potential stays below lambda keep an exact zero coefficient

The inhibition is evaluated matrix-free as correlate(conv_transpose(a)) - a, which
equals Phi^T Phi a - a by linearity and avoids building the Gram operator of a
convolutional dictionary. The ODE is integrated with explicit Euler steps.

With soft thresholding the fixed points of the dynamics are minimizers of E, and
the energy trace of a solve is non-increasing for small step sizes.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, cpu_count, delayed

from ..config import DIVERGENCE_LIMIT, DUPLICATE_GRAM_TOLERANCE, LcaConfig, ThresholdMode
from ..core import (
    ActivationTensor,
    Dictionary,
    DimensionMismatchError,
    ImageTensor,
    conv_transpose,
    correlate,
    operator_norm,
)

logger = logging.getLogger(__name__)


class LcaDivergenceError(RuntimeError):
    """Exception raised when membrane potentials blow up (step size too large)."""

    def __init__(self, step: int, max_potential: float):
        super().__init__(
            f"LCA diverged at step {step}: max |u| = {max_potential:.3e} exceeds "
            f"{DIVERGENCE_LIMIT:.0e}; reduce the step size"
        )
        self.step = step
        self.max_potential = max_potential


@dataclass
class LcaState:
    """
    State of one LCA solve.

    Attributes:
        u: Membrane potentials, same shape as the code
        a: Thresholded activations, a = threshold(u, lambda)
        energy_trace: Energy after every step taken
        steps_taken: Number of Euler steps taken
        converged: True if the tolerance was reached before max_steps
        recon: Cached reconstruction Phi a (None until computed)
    """

    u: np.ndarray
    a: ActivationTensor
    energy_trace: List[float] = field(default_factory=list)
    steps_taken: int = 0
    converged: bool = False
    recon: Optional[ImageTensor] = None

    @property
    def final_energy(self) -> float:
        return self.energy_trace[-1] if self.energy_trace else float("nan")

    def __repr__(self) -> str:
        return (
            f"LcaState(shape={self.a.shape}, steps={self.steps_taken}, "
            f"converged={self.converged}, energy={self.final_energy:.6g})"
        )


def threshold(
    u: np.ndarray, lam: float, mode: ThresholdMode = ThresholdMode.SIGNED_SOFT
) -> np.ndarray:
    """
    Soft-threshold activation T_lambda.

    - signed_soft: sign(u) * max(|u| - lambda, 0)
    - nonneg_soft: max(u - lambda, 0)

    Entries at or below the threshold are exact zeros.

    Example:
        >>> threshold(np.array([0.3, 1.5, -1.5]), 0.5)
        array([ 0. ,  1. , -1. ])
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    u = np.asarray(u, dtype=np.float64)
    mode = ThresholdMode(mode)
    if mode is ThresholdMode.NONNEG_SOFT:
        return np.where(u > lam, u - lam, 0.0)
    return np.where(np.abs(u) > lam, u - np.sign(u) * lam, 0.0)


def energy(
    image: ImageTensor, dictionary: Dictionary, acts: ActivationTensor, lam: float
) -> float:
    """
    Sparse coding objective 1/2 ||x - Phi a||^2 + lambda ||a||_1 for one sample.

    Example:
        >>> energy(image, dictionary, ActivationTensor.zeros(2, 2, 4), 0.1)  # = 1/2 ||x||^2
    """
    recon = conv_transpose(acts, dictionary, image.height, image.width)
    return _energy_from_recon(image, recon, acts, lam)


def _energy_from_recon(
    image: ImageTensor, recon: ImageTensor, acts: ActivationTensor, lam: float
) -> float:
    residual = image.data - recon.data
    return float(0.5 * np.sum(residual * residual) + lam * np.sum(np.abs(acts.data)))


def inhibition(acts: ActivationTensor, dictionary: Dictionary, recon: ImageTensor) -> np.ndarray:
    """Lateral inhibition Phi^T Phi a - a, given recon = Phi a."""
    return correlate(recon, dictionary).data - acts.data


def initial_state(image: ImageTensor, dictionary: Dictionary, cfg: LcaConfig) -> LcaState:
    """
    Starting state u ~ 0 with a seeded per-unit jitter of amplitude ``cfg.jitter``.

    The jitter breaks exact symmetry between duplicate elements reproducibly.
    """
    shape = dictionary.map_shape(image.height, image.width) + (dictionary.num_elements,)
    rng = np.random.default_rng(cfg.seed)
    u = cfg.jitter * rng.uniform(-1.0, 1.0, size=shape)
    a = ActivationTensor(threshold(u, cfg.lam, cfg.threshold_mode))
    return LcaState(u=u, a=a)


def lca_step(
    state: LcaState,
    drive: ActivationTensor,
    dictionary: Dictionary,
    image: ImageTensor,
    cfg: LcaConfig,
) -> LcaState:
    """
    One explicit Euler step of the LCA dynamics.

    u <- u + eta * (-u + drive - (Phi^T Phi a - a)), then a <- threshold(u, lambda),
    and the energy of the new code is appended to the trace.

    Args:
        state: Current state (not modified)
        drive: correlate(image, dictionary), computed once per solve
        dictionary: Fixed dictionary
        image: Input image
        cfg: Solver settings

    Returns:
        New LcaState with steps_taken incremented

    Raises:
        LcaDivergenceError: If any |u| exceeds 1e6
        DimensionMismatchError: If drive and state shapes differ
    """
    if drive.shape != state.a.shape or state.u.shape != state.a.shape:
        raise DimensionMismatchError(
            f"state: drive {drive.shape}, u {state.u.shape}, a {state.a.shape}"
        )
    recon = state.recon
    if recon is None:
        recon = conv_transpose(state.a, dictionary, image.height, image.width)

    inhib = inhibition(state.a, dictionary, recon)
    u = state.u + cfg.step_size * (-state.u + drive.data - inhib)

    max_potential = float(np.max(np.abs(u)))
    if not max_potential <= DIVERGENCE_LIMIT:
        raise LcaDivergenceError(state.steps_taken + 1, max_potential)

    a = ActivationTensor(threshold(u, cfg.lam, cfg.threshold_mode))
    new_recon = conv_transpose(a, dictionary, image.height, image.width)
    trace = state.energy_trace + [_energy_from_recon(image, new_recon, a, cfg.lam)]
    return LcaState(
        u=u,
        a=a,
        energy_trace=trace,
        steps_taken=state.steps_taken + 1,
        converged=False,
        recon=new_recon,
    )


def encode(image: ImageTensor, dictionary: Dictionary, cfg: Optional[LcaConfig] = None) -> LcaState:
    """
    Sparse code of ``image`` under a fixed dictionary.

    Steps the dynamics from u ~ 0 until the mean |du| of a step falls below
    ``cfg.tolerance`` or ``cfg.max_steps`` steps were taken. Running out of steps is
    reported through ``converged=False`` (and a warning), not raised.

    Args:
        image: Input image
        dictionary: Fixed dictionary (read only, may be shared across threads)
        cfg: Solver settings (defaults if None)

    Returns:
        Final LcaState

    Raises:
        LcaDivergenceError: If the dynamics diverge

    Example:
        >>> state = encode(image, dictionary, LcaConfig(lam=0.1))
        >>> state.converged, state.steps_taken
        (True, 212)
    """
    cfg = cfg or LcaConfig()
    if image.channels != dictionary.channels:
        raise DimensionMismatchError(
            f"channels: image has {image.channels}, dictionary has {dictionary.channels}"
        )
    drive = correlate(image, dictionary)
    state = initial_state(image, dictionary, cfg)

    for _ in range(cfg.max_steps):
        new_state = lca_step(state, drive, dictionary, image, cfg)
        delta = float(np.mean(np.abs(new_state.u - state.u)))
        state = new_state
        if delta < cfg.tolerance:
            state.converged = True
            break

    if not state.converged:
        logger.warning(
            "LCA stopped after %d steps without reaching tolerance %.1e",
            state.steps_taken,
            cfg.tolerance,
        )

    if cfg.merge_duplicates:
        state = merge_duplicate_elements(state, image, dictionary, cfg)
    return state


def duplicate_groups(dictionary: Dictionary) -> List[List[int]]:
    """
    Groups of exactly identical elements, lowest index first.

    Two elements count as identical when their norms agree and their cosine
    similarity is at least 1 - 1e-12.
    """
    norms = dictionary.norms()
    safe = np.where(norms > 0, norms, 1.0)
    cosine = dictionary.gram() / np.outer(safe, safe)
    groups = []
    assigned = set()
    for i in range(dictionary.num_elements):
        if i in assigned:
            continue
        members = [
            j
            for j in range(i + 1, dictionary.num_elements)
            if j not in assigned
            and cosine[i, j] >= 1.0 - DUPLICATE_GRAM_TOLERANCE
            and abs(norms[i] - norms[j]) <= DUPLICATE_GRAM_TOLERANCE
        ]
        if members:
            groups.append([i] + members)
            assigned.update(members)
    return groups


def merge_duplicate_elements(
    state: LcaState, image: ImageTensor, dictionary: Dictionary, cfg: LcaConfig
) -> LcaState:
    """
    Move the coefficients of identical elements onto the lowest index of each group.

    The reconstruction is unchanged and the L1 term cannot grow. Potentials are
    rebuilt so that a = threshold(u, lambda) still holds exactly, and the last
    energy entry is replaced by the merged energy.
    """
    groups = duplicate_groups(dictionary)
    if not groups:
        return state

    u = state.u.copy()
    a = state.a.data
    changed = False
    for group in groups:
        winner, losers = group[0], group[1:]
        if not np.any(a[:, :, losers]):
            continue
        total = np.sum(a[:, :, group], axis=2)
        u[:, :, winner] = np.where(total != 0, total + np.sign(total) * cfg.lam, 0.0)
        u[:, :, losers] = 0.0
        changed = True

    if not changed:
        return state

    merged = ActivationTensor(threshold(u, cfg.lam, cfg.threshold_mode))
    recon = conv_transpose(merged, dictionary, image.height, image.width)
    # One trace entry per step; the merged energy replaces the last
    trace = list(state.energy_trace)
    if trace:
        trace[-1] = _energy_from_recon(image, recon, merged, cfg.lam)
    logger.debug("Merged duplicate elements %s", groups)
    return LcaState(
        u=u,
        a=merged,
        energy_trace=trace,
        steps_taken=state.steps_taken,
        converged=state.converged,
        recon=recon,
    )


def encode_batch(
    images: Sequence[ImageTensor],
    dictionary: Dictionary,
    cfg: Optional[LcaConfig] = None,
    threads: Optional[int] = None,
) -> List[LcaState]:
    """
    Encode several images against one shared dictionary.

    Solves run on worker threads; results come back in input order, so any
    reduction over them is independent of the thread count.

    Args:
        images: Images to encode
        dictionary: Shared read-only dictionary
        cfg: Solver settings
        threads: Worker count (None = all cores, 1 = sequential)
    """
    cfg = cfg or LcaConfig()
    workers = threads or cpu_count()
    if workers <= 1 or len(images) <= 1:
        return [encode(image, dictionary, cfg) for image in images]
    solves = Parallel(n_jobs=workers, prefer="threads")
    return solves(delayed(encode)(image, dictionary, cfg) for image in images)


def check_step_size(
    dictionary: Dictionary, image_height: int, image_width: int, cfg: LcaConfig
) -> float:
    """
    Product eta * ||Phi^T Phi|| for this geometry.

    Logs a warning above 1, where explicit Euler no longer guarantees a monotone
    energy trace.
    """
    product = cfg.step_size * operator_norm(dictionary, image_height, image_width)
    if product > 1.0:
        logger.warning(
            "step_size * ||Phi^T Phi|| = %.3f > 1; the energy trace may oscillate", product
        )
    return product
