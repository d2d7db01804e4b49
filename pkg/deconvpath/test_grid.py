"""Tests for histogram binning and the Gaussian convolution matrix."""
import numpy as np
import pytest
from scipy.stats import norm

from deconvpath.errors import GridError
from deconvpath.grid import Grid, build_grid, build_kernel, marginal_on_points, rebin


def test_build_grid_counts_and_midpoints():
    grid = build_grid([0.0, 1.0, 2.0, 3.0], bins=4)
    assert grid.width == pytest.approx(0.75)
    np.testing.assert_allclose(grid.midpoints, [0.375, 1.125, 1.875, 2.625])
    np.testing.assert_array_equal(grid.counts, [1, 1, 1, 1])
    assert grid.n == 4


def test_bins_are_half_open_except_the_last():
    grid = build_grid([0.0, 0.5, 1.0], bins=2)
    # 0.5 sits on the shared edge and goes right; the maximum stays in the last bin
    np.testing.assert_array_equal(grid.counts, [1, 2])


def test_build_grid_errors():
    with pytest.raises(GridError, match="no data"):
        build_grid([], bins=10)
    with pytest.raises(GridError, match="degenerate range"):
        build_grid([2.0, 2.0, 2.0], bins=10)


def test_edges_cover_the_sample_range():
    samples = np.random.default_rng(1).normal(size=500)
    grid = build_grid(samples, bins=25)
    assert grid.edges[0] == pytest.approx(samples.min())
    assert grid.edges[-1] == pytest.approx(samples.max())
    assert grid.counts.sum() == 500


def test_rebin_shares_bins():
    samples = np.random.default_rng(2).normal(size=300)
    grid = build_grid(samples, bins=20)
    half = rebin(grid, samples[:150])
    other = rebin(grid, samples[150:])
    np.testing.assert_array_equal(half.counts + other.counts, grid.counts)
    np.testing.assert_array_equal(half.midpoints, grid.midpoints)
    with pytest.raises(GridError, match="sample outside grid range"):
        rebin(grid, [samples.max() + 1.0])


def test_grid_rejects_inconsistent_counts():
    with pytest.raises(GridError):
        Grid(midpoints=np.array([0.0, 1.0]), width=1.0, counts=np.array([1, 2]), n=5)
    with pytest.raises(GridError):
        Grid(midpoints=np.array([0.0, 1.0, 3.0]), width=1.0, counts=np.array([1, 1, 1]), n=3)


def test_kernel_entries():
    grid = build_grid(np.linspace(-4, 4, 101), bins=17)
    kernel = build_kernel(grid)
    xi = grid.midpoints
    assert kernel.G[2, 5] == pytest.approx(grid.width * norm.pdf(xi[5] - xi[2]))
    np.testing.assert_allclose(kernel.G, kernel.G.T)
    assert kernel.size == grid.size


def test_marginal_on_points():
    grid = build_grid(np.linspace(-1, 1, 11), bins=10)
    f = np.full(grid.size, 1.0 / (grid.width * grid.size))
    m = marginal_on_points(f, grid, [0.0, 5.0])
    assert m[0] == pytest.approx(np.mean(norm.pdf(grid.midpoints)))
    assert m[1] < m[0]
    with pytest.raises(GridError, match="density not normalized"):
        marginal_on_points(2 * f, grid, [0.0])
