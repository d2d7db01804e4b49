"""Tests for the linear-time fused-lasso prox."""
import time

import numpy as np
import pytest
from scipy.optimize import minimize

from deconvpath.errors import ProxError
from deconvpath.fused_prox import fused_prox, prox_objective


def optimality_certificate(alpha, z, lam):
    """Dual vector v with z - alpha = D^T v; optimal iff |v| <= lam and v = lam*sign(D alpha) off ties."""
    resid = z - alpha
    v = np.cumsum(resid)[:-1]
    return v, float(resid.sum())


def dual_oracle(z, lam):
    """Solve the box-constrained dual numerically and map back to the primal."""
    n = z.size

    def dual(v):
        dtv = np.concatenate(([v[0]], np.diff(v), [-v[-1]]))
        r = z - dtv
        return 0.5 * float(r @ r), -(r[:-1] - r[1:])

    res = minimize(dual, np.zeros(n - 1), jac=True, method="L-BFGS-B", bounds=[(-lam, lam)] * (n - 1),
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 5000})
    v = res.x
    return z - np.concatenate(([v[0]], np.diff(v), [-v[-1]]))


def test_known_solution():
    np.testing.assert_allclose(fused_prox([0, 0, 10, 10], 1.0), [0.5, 0.5, 9.5, 9.5], atol=1e-12)


def test_trivial_cases():
    z = np.array([3.0, -1.0, 2.0])
    np.testing.assert_array_equal(fused_prox(z, 0.0), z)
    np.testing.assert_array_equal(fused_prox([4.2], 10.0), [4.2])
    np.testing.assert_allclose(fused_prox(z, 1e6), np.full(3, z.mean()), atol=1e-9)


def test_random_instances_satisfy_optimality():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 13))
        z = rng.normal(scale=3.0, size=n)
        lam = float(rng.uniform(0.01, 5.0))
        alpha = fused_prox(z, lam)
        v, total = optimality_certificate(alpha, z, lam)
        assert abs(total) <= 1e-9
        assert np.all(np.abs(v) <= lam + 1e-9)
        jumps = alpha[:-1] - alpha[1:]
        moving = np.abs(jumps) > 1e-10
        np.testing.assert_allclose(v[moving], lam * np.sign(jumps[moving]), atol=1e-8)
        oracle = dual_oracle(z, lam)
        assert prox_objective(alpha, z, lam) <= prox_objective(oracle, z, lam) + 1e-9


def test_mean_is_preserved():
    z = np.random.default_rng(1).normal(size=40)
    assert fused_prox(z, 0.7).mean() == pytest.approx(z.mean())


def test_invalid_arguments():
    with pytest.raises(ProxError, match="invalid target"):
        fused_prox([1.0, np.nan], 1.0)
    with pytest.raises(ProxError, match="invalid target"):
        fused_prox([], 1.0)
    with pytest.raises(ProxError):
        fused_prox([1.0, 2.0], -1.0)


def total_variation(x):
    return float(np.sum(np.abs(np.diff(x))))


def test_total_variation_shrinks_as_lambda_grows():
    rng = np.random.default_rng(2)
    for _ in range(50):
        z = rng.normal(scale=2.0, size=int(rng.integers(2, 40)))
        lams = np.sort(rng.uniform(0.0, 4.0, size=5))
        tvs = [total_variation(fused_prox(z, lam)) for lam in lams]
        assert np.all(np.diff(tvs) <= 1e-9)
        assert tvs[0] <= total_variation(z) + 1e-9


def test_prox_is_nonexpansive():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(2, 50))
        lam = float(rng.uniform(0.01, 3.0))
        z1, z2 = rng.normal(scale=3.0, size=(2, n))
        gap = np.linalg.norm(fused_prox(z1, lam) - fused_prox(z2, lam))
        assert gap <= np.linalg.norm(z1 - z2) + 1e-9


def best_time(fun, repeats=3):
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fun()
        times.append(time.perf_counter() - started)
    return min(times)


@pytest.mark.slow
def test_runtime_grows_linearly():
    rng = np.random.default_rng(4)
    small = rng.normal(size=10_000)
    large = rng.normal(size=100_000)
    t_small = best_time(lambda: fused_prox(small, 0.5))
    t_large = best_time(lambda: fused_prox(large, 0.5))
    assert t_large <= 15 * t_small
