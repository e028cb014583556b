"""
Test utilities package for problem builders and reference solutions.
"""

from .problems import (
    SMALL_GEOMETRIES,
    random_image,
    random_dictionary,
    random_code,
    small_problem,
    orthogonal_dictionary,
    tiny_corpus,
)

from .oracles import (
    dense_synthesis_matrix,
    dense_energy,
    ista_solve,
    numeric_gradient,
)

__all__ = [
    "SMALL_GEOMETRIES",
    "random_image",
    "random_dictionary",
    "random_code",
    "small_problem",
    "orthogonal_dictionary",
    "tiny_corpus",
    "dense_synthesis_matrix",
    "dense_energy",
    "ista_solve",
    "numeric_gradient",
]
