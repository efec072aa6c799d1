"""Dense 64-bit matrix helpers.

A DenseMatrix is a C-contiguous float64 numpy array of rank 2 with at least one
row and one column. The products below also accept stacks of matrices (a
leading batch axis) so the models can run a whole mini-batch through the same
code path as one example.
"""

from typing import Sequence, Union

import numpy as np

from app.errors import ShapeError

ArrayLike = Union[np.ndarray, Sequence[float], Sequence[Sequence[float]]]


def as_dense_matrix(values: ArrayLike) -> np.ndarray:
    """Validate and convert to a row-major float64 matrix."""
    matrix = np.ascontiguousarray(values, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeError(f"expected a rank-2 matrix, got shape {matrix.shape}")
    rows, cols = matrix.shape
    if rows < 1 or cols < 1:
        raise ShapeError(f"matrix must have at least one row and column, got {rows}x{cols}")
    return matrix


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product a·b; either side may carry a leading batch axis."""
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    if a.ndim == 3 and b.ndim == 3 and a.shape[0] != b.shape[0]:
        raise ShapeError(f"matmul batch mismatch: {a.shape} x {b.shape}")
    return np.matmul(a, b)


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of two same-shape operands (no broadcasting)."""
    if a.shape != b.shape:
        raise ShapeError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return np.multiply(a, b)


def transpose_last(a: np.ndarray) -> np.ndarray:
    """Swap the two trailing axes (matrix transpose, batch axis untouched)."""
    return np.swapaxes(a, -1, -2)
