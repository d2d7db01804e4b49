"""Tests for the benchmark mixtures and the Monte Carlo harness."""
import os
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import norm

from deconvpath.errors import SimulationError
from deconvpath.grid import build_grid
from deconvpath.simulate import (
    EXAMPLE_WEIGHTS, MixtureSpec, benchmark_example, count_modes, density_mse, draw, mass_interval,
    mixture_cdf, mixture_density, mode_locations, run_benchmark, run_replicate,
)

SMALL_TAUS = np.geomspace(1e3, 1e-1, 5)


def test_examples():
    ex1 = benchmark_example(1)
    assert ex1.weights == (0.2, 0.3, 0.3, 0.2)
    assert ex1.locations == (-3.0, -1.5, 1.5, 3.0)
    assert ex1.variances == (0.01,) * 4
    assert benchmark_example(3).locations == (0.0, 0.0, 0.0)
    assert benchmark_example(4).variances == (1.0, 2.0, 2.0)
    for weights in EXAMPLE_WEIGHTS.values():
        assert sum(weights) == Fraction(1)
    with pytest.raises(SimulationError):
        benchmark_example(5)


def test_mixture_spec_validation():
    with pytest.raises(SimulationError):
        MixtureSpec(weights=(0.5, 0.4), locations=(0.0, 1.0), variances=(1.0, 1.0))
    with pytest.raises(SimulationError):
        MixtureSpec(weights=(1.0,), locations=(0.0,), variances=(0.0,))


def test_draw_is_deterministic_and_has_the_right_moments():
    spec = benchmark_example(1)
    mu, y = draw(spec, 1_000_000, seed=7)
    mu_again, y_again = draw(spec, 1_000_000, seed=7)
    np.testing.assert_array_equal(mu, mu_again)
    np.testing.assert_array_equal(y, y_again)
    assert abs(mu.mean() - spec.mean) <= 4 * mu.std() / np.sqrt(mu.size)
    assert y.var() - mu.var() == pytest.approx(1.0, abs=0.03)


def test_mixture_density_and_cdf():
    spec = benchmark_example(4)
    x = np.linspace(-20, 25, 20001)
    assert np.sum(mixture_density(spec, x)) * (x[1] - x[0]) == pytest.approx(1.0, abs=1e-6)
    assert float(mixture_cdf(spec, 25.0)) == pytest.approx(1.0)


def test_mass_interval():
    standard = MixtureSpec(weights=(1.0,), locations=(0.0,), variances=(1.0,))
    lo, hi = mass_interval(standard, 0.95)
    assert hi == pytest.approx(norm.ppf(0.975), abs=1e-8)
    assert lo == pytest.approx(-hi, abs=1e-8)
    spec = benchmark_example(3)
    lo95, hi95 = mass_interval(spec, 0.95)
    lo99, hi99 = mass_interval(spec, 0.99)
    assert lo99 < lo95 < hi95 < hi99
    assert float(mixture_cdf(spec, hi99) - mixture_cdf(spec, lo99)) == pytest.approx(0.99, abs=1e-8)


def test_density_mse():
    spec = benchmark_example(2)
    grid = build_grid(np.linspace(-6, 7, 50), bins=60)
    truth = mixture_density(spec, grid.midpoints)
    interval = mass_interval(spec, 0.95)
    assert density_mse(truth, grid, spec, interval) == 0.0
    assert density_mse(truth + 0.1, grid, spec, interval) == pytest.approx(0.01)
    with pytest.raises(SimulationError, match="no grid points in interval"):
        density_mse(truth, grid, spec, (100.0, 101.0))


def test_count_modes():
    x = np.linspace(-5, 5, 200)
    f = np.exp(-0.5 * (x + 2) ** 2 / 0.1) + np.exp(-0.5 * (x - 2) ** 2 / 0.1)
    assert count_modes(f) == 2
    assert count_modes(np.exp(-x)) == 1
    assert count_modes(f + 0.05 * np.exp(-0.5 * x ** 2 / 0.01)) == 2
    grid = build_grid(x, bins=200)
    np.testing.assert_allclose(sorted(mode_locations(f, grid)), [-2.0, 2.0], atol=0.06)


def test_run_benchmark_smoke_and_determinism():
    first = run_benchmark(1, 300, reps=2, method="l1", seed=3, bins=40, taus=SMALL_TAUS)
    second = run_benchmark(1, 300, reps=2, method="l1", seed=3, bins=40, taus=SMALL_TAUS)
    assert [rep.seed for rep in first.replicates] == [3, 4]
    assert first.to_dict() == second.to_dict()
    for rep in first.replicates:
        assert rep.ok
        assert np.isfinite(rep.mse95) and np.isfinite(rep.means_mse)
    assert first.mean("mse95") == pytest.approx(np.mean([rep.mse95 for rep in first.replicates]))


def test_run_benchmark_l2_smoke():
    result = run_benchmark(4, 400, reps=1, method="l2", seed=1, bins=40, taus=SMALL_TAUS)
    assert result.replicates[0].ok
    assert np.isfinite(result.replicates[0].mse99)


def test_replicate_failures_are_recorded():
    result = run_replicate(9, 100, "l1", seed=0, bins=40, k=1, taus=SMALL_TAUS)
    assert not result.ok
    assert "unknown example" in result.error


def test_run_benchmark_argument_errors():
    with pytest.raises(SimulationError):
        run_benchmark(1, 100, reps=0)
    with pytest.raises(SimulationError):
        run_benchmark(1, 100, reps=1, method="l3")
    with pytest.raises(SimulationError):
        run_benchmark(6, 100, reps=1)


@pytest.mark.slow
def test_example1_l1_desk_scale():
    result = run_benchmark(1, 100_000, reps=5, method="l1", seed=0, jobs=os.cpu_count() or 1)
    assert 2.0 <= 100 * result.mean("mse95") <= 5.5
    recovered = sum(1 for rep in result.replicates if rep.modes == 4)
    assert recovered >= 4


@pytest.mark.slow
def test_example1_means_desk_scale():
    result = run_benchmark(1, 10_000, reps=5, method="l1", seed=0, jobs=os.cpu_count() or 1)
    assert 62.0 <= result.mean("means_mse") <= 67.0


@pytest.mark.slow
def test_example4_l2_desk_scale():
    result = run_benchmark(4, 10_000, reps=5, method="l2", seed=0, jobs=os.cpu_count() or 1)
    assert np.isfinite(result.mean("mse95"))
