"""
Independent reference solutions.

The oracles here build the synthesis operator as an explicit dense matrix by
placing every element at every site, so they share no code with the strided
maps they are used to check.
"""

from typing import Callable

import numpy as np

from src.core import Dictionary, ImageTensor


def dense_synthesis_matrix(dictionary: Dictionary, height: int, width: int) -> np.ndarray:
    """
    Dense matrix Phi of shape (height * width * channels, map_h * map_w * K).

    Column order matches a row-major (row, col, element) activation array; row
    order matches a row-major (row, col, channel) image array.

    Parameters
    ----------
    dictionary : Dictionary
        Convolutional dictionary
    height, width : int
        Image size

    Returns
    -------
    np.ndarray
        The synthesis matrix
    """
    p, s, k_total, c = (
        dictionary.patch,
        dictionary.stride,
        dictionary.num_elements,
        dictionary.channels,
    )
    map_h = (height - p) // s + 1
    map_w = (width - p) // s + 1
    matrix = np.zeros((height * width * c, map_h * map_w * k_total))
    column = 0
    for r in range(map_h):
        for q in range(map_w):
            for k in range(k_total):
                placed = np.zeros((height, width, c))
                placed[r * s : r * s + p, q * s : q * s + p, :] = dictionary.elements[k]
                matrix[:, column] = placed.ravel()
                column += 1
    return matrix


def dense_energy(matrix: np.ndarray, x: np.ndarray, a: np.ndarray, lam: float) -> float:
    """1/2 ||x - Phi a||^2 + lam ||a||_1 with flat vectors."""
    residual = x.ravel() - matrix @ a.ravel()
    return 0.5 * float(residual @ residual) + lam * float(np.sum(np.abs(a)))


def ista_solve(
    image: ImageTensor,
    dictionary: Dictionary,
    lam: float,
    max_iter: int = 20000,
    tol: float = 1e-13,
) -> np.ndarray:
    """
    Proximal gradient (ISTA) minimizer of the sparse coding objective.

    Uses the step 1 / ||Phi^T Phi||, which guarantees monotone descent.

    Returns
    -------
    np.ndarray
        Flat code vector in (row, col, element) order
    """
    matrix = dense_synthesis_matrix(dictionary, image.height, image.width)
    x = image.data.ravel()
    lipschitz = float(np.linalg.eigvalsh(matrix.T @ matrix)[-1])
    step = 1.0 / lipschitz
    a = np.zeros(matrix.shape[1])
    for _ in range(max_iter):
        z = a + step * (matrix.T @ (x - matrix @ a))
        new = np.sign(z) * np.maximum(np.abs(z) - step * lam, 0.0)
        if np.max(np.abs(new - a)) < tol:
            a = new
            break
        a = new
    return a


def numeric_gradient(
    loss: Callable[[np.ndarray], float], values: np.ndarray, epsilon: float = 1e-6
) -> np.ndarray:
    """Centred finite-difference gradient of ``loss`` at ``values``."""
    values = np.asarray(values, dtype=np.float64)
    grad = np.zeros_like(values)
    for index in np.ndindex(values.shape):
        plus = values.copy()
        minus = values.copy()
        plus[index] += epsilon
        minus[index] -= epsilon
        grad[index] = (loss(plus) - loss(minus)) / (2.0 * epsilon)
    return grad
