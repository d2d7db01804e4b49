"""Histogram grid and the discretized Gaussian convolution operator.

Everything downstream lives on the same set of equally spaced midpoints:
the observed counts are binned on them and the mixing density is
supported on them.
"""
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import norm

from deconvpath.errors import GridError

DEFAULT_BINS = 250
GAUSSIAN = "gaussian"


@dataclass(frozen=True, eq=False)
class Grid:
    """Equal-width histogram: midpoints, bin width, counts and sample size."""
    midpoints: np.ndarray
    width: float
    counts: np.ndarray
    n: int

    def __post_init__(self):
        midpoints = np.asarray(self.midpoints, dtype=float)
        counts = np.asarray(self.counts)
        if midpoints.ndim != 1 or midpoints.size == 0:
            raise GridError("grid needs at least one midpoint")
        if counts.shape != midpoints.shape:
            raise GridError("counts and midpoints differ in length")
        if not self.width > 0:
            raise GridError("bin width must be positive")
        if np.any(counts < 0) or not np.all(np.equal(np.mod(counts, 1), 0)):
            raise GridError("counts must be nonnegative integers")
        if int(counts.sum()) != int(self.n) or self.n < 0:
            raise GridError("counts do not sum to n")
        if midpoints.size > 1:
            spacing = np.diff(midpoints)
            # round-off of lo + width * (i + 0.5) grows with |midpoint|
            tol = 1e-12 * self.width + 64 * np.finfo(float).eps * float(np.max(np.abs(midpoints)))
            if np.max(np.abs(spacing - self.width)) > tol:
                raise GridError("midpoints are not equally spaced by the bin width")
        object.__setattr__(self, "midpoints", midpoints)
        object.__setattr__(self, "counts", counts.astype(np.int64))
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "n", int(self.n))

    @property
    def size(self):
        return self.midpoints.size

    @property
    def edges(self):
        left = self.midpoints[0] - self.width / 2
        return left + self.width * np.arange(self.size + 1)

    def with_counts(self, counts):
        """Same bins, different counts (used for train/held-out splits)."""
        counts = np.asarray(counts)
        return replace(self, counts=counts, n=int(counts.sum()))


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """G[i, j] = width * phi(xi[j] - xi[i]) for the standard normal phi."""
    G: np.ndarray
    kernel: str = GAUSSIAN

    @property
    def size(self):
        return self.G.shape[0]


def _bin_index(samples, left, width, size):
    idx = np.floor((samples - left) / width).astype(np.int64)
    # last bin is closed on the right so the maximum is counted
    return np.clip(idx, 0, size - 1)


def build_grid(samples, bins=DEFAULT_BINS):
    """Bin ``samples`` into ``bins`` equal-width bins spanning [min, max].

    Bins are half-open [left, right) except the last one, which also
    contains the sample maximum.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise GridError("no data")
    if bins < 2:
        raise GridError("need at least 2 bins")
    if not np.all(np.isfinite(samples)):
        raise GridError("samples must be finite")
    lo, hi = float(samples.min()), float(samples.max())
    if hi <= lo:
        raise GridError("degenerate range")
    width = (hi - lo) / bins
    midpoints = lo + width * (np.arange(bins) + 0.5)
    counts = np.bincount(_bin_index(samples, lo, width, bins), minlength=bins)
    return Grid(midpoints=midpoints, width=width, counts=counts, n=samples.size)


def rebin(grid, samples):
    """Count ``samples`` on the bins of an existing grid."""
    samples = np.asarray(samples, dtype=float).ravel()
    edges = grid.edges
    tol = 1e-9 * grid.width
    if samples.size and (samples.min() < edges[0] - tol or samples.max() > edges[-1] + tol):
        raise GridError("sample outside grid range")
    idx = _bin_index(samples, edges[0], grid.width, grid.size)
    return grid.with_counts(np.bincount(idx, minlength=grid.size))


def build_kernel(grid):
    """Discretized convolution operator for the standard normal kernel."""
    xi = grid.midpoints
    G = grid.width * norm.pdf(xi[np.newaxis, :] - xi[:, np.newaxis])
    return KernelMatrix(G=G)


def marginal_on_points(f, grid, y):
    """Evaluate m(y) = sum_i width * phi(y - xi_i) * f_i at query points ``y``."""
    f = np.asarray(f, dtype=float)
    if f.shape != grid.midpoints.shape:
        raise GridError("density length does not match grid")
    if np.any(f < 0) or abs(grid.width * f.sum() - 1.0) > 1e-8:
        raise GridError("density not normalized")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    phi = norm.pdf(y[:, np.newaxis] - grid.midpoints[np.newaxis, :])
    return grid.width * phi @ f
