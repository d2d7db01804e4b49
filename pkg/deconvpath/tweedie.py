"""Posterior means of the latent normal means under a fitted mixing density.

With a discrete mixing measure on the grid midpoints, the posterior mean
E[mu | y] = sum_i xi_i phi(y - xi_i) f_i / sum_i phi(y - xi_i) f_i is the
same number Tweedie's rule y + d/dy log m(y) gives for that marginal. The
ratio form is evaluated in log space.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax
from scipy.stats import norm

from deconvpath.errors import DeconvError, GridError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class MeansEstimate:
    y: np.ndarray
    mu_hat: np.ndarray
    # rows where every mixture weight underflowed and the nearest midpoint was used
    fallback: np.ndarray

    @property
    def any_fallback(self):
        return bool(np.any(self.fallback))


def _density_of(estimate_or_f):
    f = getattr(estimate_or_f, "f_hat", estimate_or_f)
    return np.asarray(f, dtype=float)


def _log_weights(f, grid, y):
    if f.shape != grid.midpoints.shape:
        raise GridError("density length does not match grid")
    if np.any(f < 0) or abs(grid.width * f.sum() - 1.0) > 1e-6:
        raise GridError("density not normalized")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if not np.all(np.isfinite(y)):
        raise DeconvError("observations must be finite")
    with np.errstate(divide="ignore"):
        log_f = np.log(f)
    return y, norm.logpdf(y[:, np.newaxis] - grid.midpoints[np.newaxis, :]) + log_f[np.newaxis, :]


def posterior_means(estimate_or_f, grid, y):
    """Posterior mean of mu for every y under the mixing density on ``grid``.

    ``estimate_or_f`` is a ThetaEstimate or a normalized density array.
    """
    f = _density_of(estimate_or_f)
    y, log_w = _log_weights(f, grid, y)
    xi = grid.midpoints
    row_max = np.max(log_w, axis=1)
    fallback = ~np.isfinite(row_max)
    mu_hat = np.empty(y.size)
    ok = ~fallback
    if np.any(ok):
        mu_hat[ok] = softmax(log_w[ok], axis=1) @ xi
    if np.any(fallback):
        logger.warning("posterior weights underflowed for %d observations; using nearest midpoint",
                       int(fallback.sum()))
        nearest = np.abs(y[fallback, np.newaxis] - xi[np.newaxis, :]).argmin(axis=1)
        mu_hat[fallback] = xi[nearest]
    return MeansEstimate(y=y, mu_hat=np.clip(mu_hat, xi[0], xi[-1]), fallback=fallback)


def log_marginal(estimate_or_f, grid, y):
    """log m(y) = log(width * sum_i phi(y - xi_i) f_i)."""
    f = _density_of(estimate_or_f)
    _, log_w = _log_weights(f, grid, y)
    return np.log(grid.width) + logsumexp(log_w, axis=1)


def tweedie_formula(estimate_or_f, grid, y, h=1e-4):
    """y + d/dy log m(y) with the derivative taken by central differences."""
    if not h > 0:
        raise DeconvError("step must be positive")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    slope = (log_marginal(estimate_or_f, grid, y + h) - log_marginal(estimate_or_f, grid, y - h)) / (2 * h)
    return y + slope


def means_mse(means, mu_true):
    """100 * mean squared error of the estimated means."""
    mu_hat = getattr(means, "mu_hat", means)
    mu_hat = np.asarray(mu_hat, dtype=float)
    mu_true = np.asarray(mu_true, dtype=float)
    if mu_hat.shape != mu_true.shape:
        raise DeconvError("length mismatch")
    return 100.0 * float(np.mean((mu_hat - mu_true) ** 2))
