"""Warm-started deconvolution paths over a decreasing grid of tau values."""
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from deconvpath.errors import PathError, SolverError
from deconvpath.objective import PenaltySpec, SolveDiagnostics, shift_to_density
from deconvpath.operators import apply
from deconvpath.solvers import SolverConfig, cold_start, penalty_operator, solve

logger = logging.getLogger(__name__)

DEFAULT_TAU_MAX = 1e7
DEFAULT_TAU_MIN = 1e-3
DEFAULT_NUM_TAU = 50


@dataclass(eq=False)
class PathEntry:
    tau: float
    estimate: object
    converged: bool
    seconds: float = field(default=0.0, compare=False)


@dataclass(eq=False)
class DeconvPath:
    grid: object
    k: int
    q: int
    entries: list = field(default_factory=list)

    @property
    def taus(self):
        return np.array([entry.tau for entry in self.entries])

    def converged_entries(self):
        return [entry for entry in self.entries if entry.converged]

    def entry_at(self, tau):
        """The entry whose tau is closest (in log scale) to ``tau``."""
        if not self.entries:
            raise PathError("path is empty")
        gaps = np.abs(np.log(self.taus) - np.log(tau))
        return self.entries[int(np.argmin(gaps))]

    def penalty_norms(self):
        """||Delta^(k+1) theta_hat||_q for every entry, in path order."""
        op = penalty_operator(self.grid.size, self.k + 1)
        if op is None:
            return np.zeros(len(self.entries))
        return np.array([np.linalg.norm(apply(op, entry.estimate.theta), ord=self.q)
                         for entry in self.entries])


def tau_grid(tau_max=DEFAULT_TAU_MAX, tau_min=DEFAULT_TAU_MIN, num_tau=DEFAULT_NUM_TAU):
    """Geometrically spaced, strictly decreasing tau values."""
    if not (tau_max > tau_min > 0):
        raise PathError("tau grid needs tau_max > tau_min > 0")
    if num_tau < 2:
        raise PathError("tau grid needs at least 2 points")
    return np.geomspace(tau_max, tau_min, int(num_tau))


def hellinger(p, q, width):
    """Hellinger distance between two densities sampled on the same grid."""
    p = np.clip(np.asarray(p, dtype=float), 0, None)
    q = np.clip(np.asarray(q, dtype=float), 0, None)
    return float(np.sqrt(0.5 * width * np.sum((np.sqrt(p) - np.sqrt(q)) ** 2)))


def compute_path_for_taus(grid, kernel, k, q, taus, cfg=None):
    """Solve at each tau in ``taus`` (must be strictly decreasing), warm-starting each from the last."""
    cfg = cfg or SolverConfig()
    taus = np.asarray(taus, dtype=float)
    if taus.size == 0 or np.any(np.diff(taus) >= 0):
        raise PathError("tau values must be strictly decreasing")
    path = DeconvPath(grid=grid, k=k, q=q)
    theta = cold_start(grid)
    warm = None
    for tau in taus:
        spec = PenaltySpec(k=k, q=q, tau=float(tau))
        started = time.perf_counter()
        try:
            estimate = solve(grid, kernel, spec, init=theta, cfg=cfg, warm=warm)
        except SolverError as e:
            best = getattr(e, "best", None)
            fallback = best if best is not None else theta
            logger.warning("tau=%g failed: %s", tau, e)
            estimate = shift_to_density(fallback, grid, kernel, spec,
                                        SolveDiagnostics(converged=False, message=str(e)))
        seconds = time.perf_counter() - started
        converged = bool(estimate.diagnostics.converged)
        path.entries.append(PathEntry(tau=float(tau), estimate=estimate, converged=converged,
                                      seconds=seconds))
        logger.info("tau=%.4g %s in %.2fs (%d iterations)", tau,
                    "converged" if converged else "NOT converged", seconds,
                    estimate.diagnostics.iterations)
        theta = estimate.theta
        warm = estimate.state if estimate.state is not None else warm
    if not path.converged_entries():
        raise PathError("path failed")
    return path


def compute_path(grid, kernel, k, q, tau_max=DEFAULT_TAU_MAX, tau_min=DEFAULT_TAU_MIN,
                 num_tau=DEFAULT_NUM_TAU, cfg=None):
    """Warm-started path from tau_max down to tau_min over ``num_tau`` log-spaced values.

    Entries that fail to converge stay on the path with ``converged=False``;
    a path with no converged entry raises PathError.
    """
    return compute_path_for_taus(grid, kernel, k, q, tau_grid(tau_max, tau_min, num_tau), cfg)
