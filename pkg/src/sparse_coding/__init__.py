"""
Sparse coding module.

This module contains:
- The LCA solver for sparse inference under a fixed dictionary
- Hebbian dictionary learning with unit-norm renormalization
"""

from .lca import (
    LcaDivergenceError,
    LcaState,
    threshold,
    energy,
    inhibition,
    initial_state,
    lca_step,
    encode,
    encode_batch,
    duplicate_groups,
    merge_duplicate_elements,
    check_step_size,
)
from .trainer import (
    TrainingDivergenceError,
    EpochStats,
    TrainStats,
    init_dictionary,
    dict_gradient,
    finite_difference_check,
    relative_error,
    train_epoch,
    train_dictionary,
    resample_dead_elements,
)

__all__ = [
    # Solver
    "LcaDivergenceError",
    "LcaState",
    "threshold",
    "energy",
    "inhibition",
    "initial_state",
    "lca_step",
    "encode",
    "encode_batch",
    "duplicate_groups",
    "merge_duplicate_elements",
    "check_step_size",
    # Dictionary learning
    "TrainingDivergenceError",
    "EpochStats",
    "TrainStats",
    "init_dictionary",
    "dict_gradient",
    "finite_difference_check",
    "relative_error",
    "train_epoch",
    "train_dictionary",
    "resample_dead_elements",
]
