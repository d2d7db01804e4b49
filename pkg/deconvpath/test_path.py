"""Tests for tau grids and warm-started paths."""
import numpy as np
import pytest

from deconvpath.errors import PathError
from deconvpath.grid import build_grid, build_kernel
from deconvpath.path import compute_path, compute_path_for_taus, hellinger, tau_grid
from deconvpath.simulate import benchmark_example, draw


@pytest.fixture(scope="module")
def problem():
    _, y = draw(benchmark_example(4), 1000, seed=5)
    grid = build_grid(y, bins=30)
    return grid, build_kernel(grid)


def test_tau_grid_is_log_spaced_and_decreasing():
    taus = tau_grid(1e7, 1e-3, 50)
    assert taus.size == 50
    assert taus[0] == pytest.approx(1e7)
    assert taus[-1] == pytest.approx(1e-3)
    np.testing.assert_allclose(np.diff(np.log(taus)), np.log(taus[1] / taus[0]))
    with pytest.raises(PathError):
        tau_grid(1.0, 10.0, 5)
    with pytest.raises(PathError):
        tau_grid(10.0, 1.0, 1)


def test_hellinger():
    p = np.array([1.0, 1.0, 0.0, 0.0])
    q = np.array([0.0, 0.0, 1.0, 1.0])
    assert hellinger(p, p, 0.5) == 0.0
    assert hellinger(p, q, 0.5) == pytest.approx(1.0)


def test_l2_path_penalty_norm_grows_as_tau_shrinks(problem):
    grid, kernel = problem
    path = compute_path(grid, kernel, k=1, q=2, tau_max=1e4, tau_min=1e-2, num_tau=8)
    assert len(path.entries) == 8
    assert all(entry.converged for entry in path.entries)
    norms = path.penalty_norms()
    assert np.all(np.diff(norms) >= -1e-6 * (1 + norms.max()))
    for entry in path.entries:
        assert grid.width * entry.estimate.f_hat.sum() == pytest.approx(1.0, abs=1e-6)


def test_entry_at_picks_nearest_tau(problem):
    grid, kernel = problem
    path = compute_path_for_taus(grid, kernel, 1, 2, [100.0, 10.0, 1.0])
    assert path.entry_at(12.0).tau == 10.0
    assert path.entry_at(1e9).tau == 100.0
    np.testing.assert_array_equal(path.taus, [100.0, 10.0, 1.0])


def test_taus_must_decrease(problem):
    grid, kernel = problem
    with pytest.raises(PathError, match="strictly decreasing"):
        compute_path_for_taus(grid, kernel, 1, 2, [1.0, 10.0])


def test_marginals_vary_smoothly_along_the_path(problem):
    grid, kernel = problem
    path = compute_path(grid, kernel, k=1, q=2, tau_max=1e3, tau_min=1e-1, num_tau=10)
    gaps = [hellinger(a.estimate.m_hat, b.estimate.m_hat, grid.width)
            for a, b in zip(path.entries, path.entries[1:])]
    assert max(gaps) < 0.1


@pytest.mark.slow
@pytest.mark.parametrize("example_id", [1, 4])
def test_l1_path_monotone_penalty(example_id):
    _, y = draw(benchmark_example(example_id), 10000, seed=example_id)
    grid = build_grid(y, bins=250)
    path = compute_path(grid, build_kernel(grid), k=1, q=1)
    norms = path.penalty_norms()
    assert np.all(np.diff(norms) >= -1e-6 * (1 + norms.max()))


@pytest.mark.parametrize("q", [1, 2])
def test_nearly_equal_taus_give_nearly_equal_fits(problem, q):
    grid, kernel = problem
    path = compute_path_for_taus(grid, kernel, 1, q, [10.0 * (1 + 1e-9), 10.0])
    first, second = path.entries
    assert first.converged and second.converged
    assert np.max(np.abs(first.estimate.f_hat - second.estimate.f_hat)) <= 1e-3


def test_marginal_gaps_never_exceed_density_gaps(problem):
    grid, kernel = problem
    path = compute_path(grid, kernel, k=1, q=2, tau_max=1e3, tau_min=1e-1, num_tau=10)
    for a, b in zip(path.entries, path.entries[1:]):
        marginal_gap = hellinger(a.estimate.m_hat, b.estimate.m_hat, grid.width)
        density_gap = hellinger(a.estimate.f_hat, b.estimate.f_hat, grid.width)
        assert marginal_gap <= density_gap * (1 + 1e-6) + 1e-12


def test_default_l1_path_converges(problem):
    grid, kernel = problem
    path = compute_path(grid, kernel, k=1, q=1, num_tau=12)
    assert all(entry.converged for entry in path.entries)
    norms = path.penalty_norms()
    assert np.all(np.diff(norms) >= -1e-6 * (1 + norms.max()))
