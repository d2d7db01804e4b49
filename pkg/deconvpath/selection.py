"""Choosing tau from a deconvolution path.

Two rules: a surrogate AIC for l1 paths (likelihood plus knot count) and a
held-out heuristic for l2 paths (held-out likelihood of the shifted fit
plus the l1 size of its differences).
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from deconvpath.errors import SelectionError
from deconvpath.grid import build_grid, build_kernel, rebin
from deconvpath.objective import nll
from deconvpath.operators import apply
from deconvpath.path import compute_path_for_taus
from deconvpath.solvers import penalty_operator

logger = logging.getLogger(__name__)

AIC = "aic"
HELDOUT = "heldout"


@dataclass(frozen=True)
class ScoreRow:
    tau: float
    score: float
    converged: bool


@dataclass
class SelectionReport:
    chosen_tau: float
    scores: list = field(default_factory=list)
    method: str = AIC
    split_seed: int = None

    def to_dict(self):
        return {
            "method": self.method,
            "chosen_tau": self.chosen_tau,
            "split_seed": self.split_seed,
            "scores": [{"tau": row.tau, "score": row.score, "converged": row.converged}
                       for row in self.scores],
        }


def _argmin(rows):
    """Minimum score over converged rows; on ties the earlier (larger tau) row wins."""
    best = None
    for row in rows:
        if not row.converged or not np.isfinite(row.score):
            continue
        if best is None or row.score < best.score:
            best = row
    if best is None:
        raise SelectionError("no converged path entry to select from")
    return best


def knot_count(theta, op, zero_tol=None):
    """Entries of Delta^(k+1) theta treated as nonzero."""
    if op is None:
        return 0
    diffs = apply(op, theta)
    if zero_tol is None:
        zero_tol = 1e-6 * max(1.0, float(np.max(np.abs(diffs), initial=0.0)))
    return int(np.count_nonzero(np.abs(diffs) > zero_tol))


def aic_select(path, grid, kernel, zero_tol=None):
    """AIC_tau = l(theta_tau) + k + 1 + #knots; smallest wins, ties go to larger tau."""
    if path.q != 1:
        raise SelectionError("AIC selection requires l1 path")
    op = penalty_operator(grid.size, path.k + 1)
    rows = []
    for entry in path.entries:
        theta = entry.estimate.theta
        score = nll(theta, grid, kernel) + path.k + 1 + knot_count(theta, op, zero_tol)
        rows.append(ScoreRow(tau=entry.tau, score=score, converged=entry.converged))
    chosen = _argmin(rows)
    logger.info("AIC selected tau=%g (score %.6g)", chosen.tau, chosen.score)
    return SelectionReport(chosen_tau=chosen.tau, scores=rows, method=AIC)


def split_counts(samples, grid, split_frac=0.75, seed=0):
    """Randomly split samples; return (train_grid, held_grid) on the bins of ``grid``."""
    samples = np.asarray(samples, dtype=float).ravel()
    if not 0 < split_frac < 1:
        raise SelectionError("split fraction must lie in (0, 1)")
    order = np.random.default_rng(seed).permutation(samples.size)
    n_train = int(round(split_frac * samples.size))
    train, held = samples[order[:n_train]], samples[order[n_train:]]
    if train.size == 0 or held.size == 0:
        raise SelectionError("split too small")
    return rebin(grid, train), rebin(grid, held)


def heldout_scores(path, held_grid, kernel, k, n_train):
    """Score each entry on held-out counts after shifting theta to the held-out sample size."""
    if held_grid.n == 0:
        raise SelectionError("split too small")
    shift = np.log(held_grid.n * held_grid.width) - np.log(n_train * held_grid.width)
    op = penalty_operator(held_grid.size, k + 1)
    rows = []
    for entry in path.entries:
        theta_held = entry.estimate.theta + shift
        roughness = float(np.sum(np.abs(apply(op, theta_held)))) if op is not None else 0.0
        score = nll(theta_held, held_grid, kernel) + roughness
        rows.append(ScoreRow(tau=entry.tau, score=score, converged=entry.converged))
    return rows


def heldout_select(samples, bins, k, taus, split_frac=0.75, seed=0, cfg=None, q=2):
    """Held-out tau selection for l2 paths.

    The binning grid is built from all samples so both splits share bins;
    the path is fit on the training split and scored on the held-out one.
    """
    grid = build_grid(samples, bins)
    kernel = build_kernel(grid)
    train_grid, held_grid = split_counts(samples, grid, split_frac, seed)
    train_path = compute_path_for_taus(train_grid, kernel, k, q, taus, cfg)
    rows = heldout_scores(train_path, held_grid, kernel, k, train_grid.n)
    chosen = _argmin(rows)
    logger.info("held-out rule selected tau=%g (score %.6g, seed %d)", chosen.tau, chosen.score, seed)
    return SelectionReport(chosen_tau=chosen.tau, scores=rows, method=HELDOUT, split_seed=seed)
