"""Banded discrete difference operators of arbitrary order."""
from dataclasses import dataclass
from math import comb

import numpy as np

from deconvpath.errors import OperatorError


@dataclass(frozen=True, eq=False)
class DiffOperator:
    """Difference operator of a given order acting on length-``cols`` vectors.

    Row r carries the coefficients (-1)^j * C(order, j) at columns r..r+order,
    so order 1 is (+1, -1) per row and higher orders are repeated products of
    the first-difference matrix. Order 0 is the identity.
    """
    order: int
    cols: int
    coefficients: np.ndarray

    @property
    def rows(self):
        return self.cols - self.order

    @property
    def shape(self):
        return (self.rows, self.cols)

    def dense(self):
        """Dense matrix form; only for testing and small problems."""
        matrix = np.zeros(self.shape)
        for r in range(self.rows):
            matrix[r, r:r + self.order + 1] = self.coefficients
        return matrix


def make_diff(size, order):
    if order < 0:
        raise OperatorError("order must be nonnegative")
    if size < order + 1:
        raise OperatorError("operator has no rows")
    coefficients = np.array([(-1) ** j * comb(order, j) for j in range(order + 1)], dtype=float)
    return DiffOperator(order=order, cols=size, coefficients=coefficients)


def apply(op, v):
    """Compute op @ v in O(cols * order)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (op.cols,):
        raise OperatorError(f"dimension mismatch: expected {op.cols}, got {v.shape}")
    return np.correlate(v, op.coefficients, mode="valid")


def apply_transpose(op, w):
    """Compute op.T @ w in O(cols * order)."""
    w = np.asarray(w, dtype=float)
    if w.shape != (op.rows,):
        raise OperatorError(f"dimension mismatch: expected {op.rows}, got {w.shape}")
    return np.convolve(w, op.coefficients, mode="full")


def gram(op):
    """Dense op.T @ op, the curvature of 0.5 * ||op @ v||^2."""
    matrix = op.dense()
    return matrix.T @ matrix
