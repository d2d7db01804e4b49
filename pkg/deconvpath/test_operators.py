"""Tests for the banded difference operators."""
import numpy as np
import pytest

from deconvpath.errors import OperatorError
from deconvpath.operators import apply, apply_transpose, gram, make_diff


@pytest.mark.parametrize("order", [0, 1, 2, 3])
def test_apply_matches_dense(order):
    rng = np.random.default_rng(order)
    op = make_diff(12, order)
    v = rng.normal(size=12)
    w = rng.normal(size=op.rows)
    np.testing.assert_allclose(apply(op, v), op.dense() @ v, atol=1e-12)
    np.testing.assert_allclose(apply_transpose(op, w), op.dense().T @ w, atol=1e-12)


def test_first_and_second_difference_rows():
    np.testing.assert_array_equal(make_diff(4, 1).dense()[0], [1, -1, 0, 0])
    np.testing.assert_array_equal(make_diff(4, 2).dense()[1], [0, 1, -2, 1])
    np.testing.assert_array_equal(make_diff(3, 0).dense(), np.eye(3))


def test_polynomials_are_annihilated():
    x = np.arange(10, dtype=float)
    np.testing.assert_allclose(apply(make_diff(10, 1), np.full(10, 3.0)), 0)
    np.testing.assert_allclose(apply(make_diff(10, 2), 2 * x - 1), 0, atol=1e-12)
    np.testing.assert_allclose(apply(make_diff(10, 3), x ** 2), 0, atol=1e-10)


def test_gram_is_dense_product():
    op = make_diff(6, 2)
    np.testing.assert_allclose(gram(op), op.dense().T @ op.dense())


def test_errors():
    with pytest.raises(OperatorError, match="operator has no rows"):
        make_diff(2, 2)
    with pytest.raises(OperatorError):
        make_diff(5, -1)
    with pytest.raises(OperatorError, match="dimension mismatch"):
        apply(make_diff(5, 1), np.zeros(4))
    with pytest.raises(OperatorError, match="dimension mismatch"):
        apply_transpose(make_diff(5, 1), np.zeros(5))
