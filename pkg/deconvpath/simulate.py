"""Gaussian-mixture benchmark examples and the Monte Carlo harness.

Each replicate runs the whole pipeline: draw latent means and noisy
observations, bin them, fit a tau path, select tau, then score the
mixing-density estimate on the central 95%/99% intervals of the true
mixture and the posterior means against the true latent means.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import bisect
from scipy.signal import find_peaks
from scipy.stats import norm

from deconvpath.errors import DeconvError, SimulationError
from deconvpath.grid import DEFAULT_BINS, build_grid, build_kernel
from deconvpath.log_utils import setup_logging
from deconvpath.path import compute_path_for_taus, tau_grid
from deconvpath.selection import aic_select, heldout_select
from deconvpath.tweedie import means_mse, posterior_means

logger = logging.getLogger(__name__)

L1 = "l1"
L2 = "l2"
METHODS = (L1, L2)

EXAMPLE_WEIGHTS = {
    1: (Fraction(1, 5), Fraction(3, 10), Fraction(3, 10), Fraction(1, 5)),
    2: (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)),
    3: (Fraction(3, 10), Fraction(2, 5), Fraction(3, 10)),
    4: (Fraction(1, 2), Fraction(2, 5), Fraction(1, 10)),
}

_EXAMPLE_COMPONENTS = {
    1: ((-3.0, -1.5, 1.5, 3.0), (0.01, 0.01, 0.01, 0.01)),
    2: ((0.0, -2.0, 3.0), (2.0, 0.1, 0.4)),
    3: ((0.0, 0.0, 0.0), (0.1, 1.0, 9.0)),
    4: ((-1.5, 1.5, 4.0), (1.0, 2.0, 2.0)),
}

# keeps inverse-CDF draws finite
_UNIFORM_EPS = 1e-16


@dataclass(frozen=True)
class MixtureSpec:
    """f_0(mu) = sum_i w_i N(mu | location_i, variance_i)."""
    weights: tuple
    locations: tuple
    variances: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if not (len(self.weights) == len(self.locations) == len(self.variances)) or w.size == 0:
            raise SimulationError("mixture components differ in length")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise SimulationError("mixture weights must be positive and sum to 1")
        if np.any(np.asarray(self.variances, dtype=float) <= 0):
            raise SimulationError("mixture variances must be positive")

    @property
    def w(self):
        return np.asarray(self.weights, dtype=float)

    @property
    def sd(self):
        return np.sqrt(np.asarray(self.variances, dtype=float))

    @property
    def loc(self):
        return np.asarray(self.locations, dtype=float)

    @property
    def mean(self):
        return float(self.w @ self.loc)


def benchmark_example(example_id):
    """One of the four standard benchmark mixtures (ids 1 to 4)."""
    if example_id not in EXAMPLE_WEIGHTS:
        raise SimulationError(f"unknown example id {example_id}; choose 1, 2, 3 or 4")
    locations, variances = _EXAMPLE_COMPONENTS[example_id]
    weights = tuple(float(w) for w in EXAMPLE_WEIGHTS[example_id])
    return MixtureSpec(weights=weights, locations=locations, variances=variances)


def _std_normal(rng, size):
    u = np.clip(rng.random(size), _UNIFORM_EPS, 1.0 - _UNIFORM_EPS)
    return norm.ppf(u)


def draw(spec, n, seed):
    """Draw (mu, y): mu from the mixture, y = mu + N(0, 1) noise."""
    if n < 1:
        raise SimulationError("need at least one draw")
    rng = np.random.default_rng(seed)
    component = rng.choice(len(spec.weights), size=n, p=spec.w)
    mu = spec.loc[component] + spec.sd[component] * _std_normal(rng, n)
    y = mu + _std_normal(rng, n)
    return mu, y


def mixture_density(spec, mu):
    mu = np.asarray(mu, dtype=float)
    return norm.pdf(mu[..., np.newaxis], loc=spec.loc, scale=spec.sd) @ spec.w


def mixture_cdf(spec, mu):
    mu = np.asarray(mu, dtype=float)
    return norm.cdf(mu[..., np.newaxis], loc=spec.loc, scale=spec.sd) @ spec.w


def mass_interval(spec, mass):
    """Central interval holding ``mass`` of the true mixing distribution."""
    if not 0 < mass < 1:
        raise SimulationError("mass must lie in (0, 1)")
    reach = 40.0 * float(spec.sd.max())
    lo_bracket, hi_bracket = float(spec.loc.min()) - reach, float(spec.loc.max()) + reach

    def quantile(p):
        return bisect(lambda x: float(mixture_cdf(spec, x)) - p, lo_bracket, hi_bracket, xtol=1e-10)

    return quantile((1.0 - mass) / 2.0), quantile((1.0 + mass) / 2.0)


def density_mse(f_hat, grid, spec, interval):
    """Mean of (f_hat - f_0)^2 over the grid midpoints inside ``interval``."""
    lo, hi = interval
    inside = (grid.midpoints >= lo) & (grid.midpoints <= hi)
    if not np.any(inside):
        raise SimulationError("no grid points in interval")
    truth = mixture_density(spec, grid.midpoints[inside])
    return float(np.mean((np.asarray(f_hat, dtype=float)[inside] - truth) ** 2))


def _peaks(f, rel_height):
    f = np.asarray(f, dtype=float)
    # pad so maxima at the ends of the grid count as peaks
    floor = float(f.min()) - 1.0
    padded = np.concatenate(([floor], f, [floor]))
    peaks, _ = find_peaks(padded, height=rel_height * float(f.max()))
    return peaks - 1


def count_modes(f, rel_height=0.1):
    """Number of local maxima of f above ``rel_height`` times its global maximum."""
    return int(_peaks(f, rel_height).size)


def mode_locations(f, grid, rel_height=0.1):
    return grid.midpoints[_peaks(f, rel_height)]


@dataclass
class ReplicateResult:
    seed: int
    mse95: float = float("nan")
    mse99: float = float("nan")
    means_mse: float = float("nan")
    chosen_tau: float = float("nan")
    modes: int = 0
    error: str = None
    seconds: float = field(default=0.0, compare=False)

    @property
    def ok(self):
        return self.error is None

    def to_dict(self):
        return {"seed": self.seed, "mse95": self.mse95, "mse99": self.mse99,
                "means_mse": self.means_mse, "chosen_tau": self.chosen_tau,
                "modes": self.modes, "error": self.error}


SCORED_FIELDS = ("mse95", "mse99", "means_mse")


@dataclass
class BenchResult:
    example_id: int
    n: int
    method: str
    bins: int
    k: int
    base_seed: int
    replicates: list = field(default_factory=list)

    def successful(self):
        return [rep for rep in self.replicates if rep.ok]

    def mean(self, name):
        values = [getattr(rep, name) for rep in self.successful()]
        return float(np.mean(values)) if values else float("nan")

    def stderr(self, name):
        values = [getattr(rep, name) for rep in self.successful()]
        if len(values) < 2:
            return float("nan")
        return float(np.std(values, ddof=1) / np.sqrt(len(values)))

    def aggregates(self):
        return {name: {"mean": self.mean(name), "stderr": self.stderr(name)} for name in SCORED_FIELDS}

    def to_dict(self):
        return {
            "example": self.example_id, "n": self.n, "method": self.method, "bins": self.bins,
            "k": self.k, "base_seed": self.base_seed,
            "failed": len(self.replicates) - len(self.successful()),
            "aggregates": self.aggregates(),
            "replicates": [rep.to_dict() for rep in self.replicates],
        }


def fit_selected(y, method, bins, k, taus, cfg=None, split_frac=0.75, seed=0):
    """Bin, fit and select; return (grid, selected estimate, SelectionReport)."""
    grid = build_grid(y, bins)
    kernel = build_kernel(grid)
    if method == L1:
        path = compute_path_for_taus(grid, kernel, k, 1, taus, cfg)
        report = aic_select(path, grid, kernel)
        return grid, path.entry_at(report.chosen_tau).estimate, report
    report = heldout_select(y, bins, k, taus, split_frac=split_frac, seed=seed, cfg=cfg, q=2)
    # refit on all data, walking the path only down to the chosen tau
    taus = np.asarray(taus, dtype=float)
    full = compute_path_for_taus(grid, kernel, k, 2, taus[taus >= report.chosen_tau], cfg)
    return grid, full.entries[-1].estimate, report


def run_replicate(example_id, n, method, seed, bins, k, taus, cfg=None, split_frac=0.75):
    """One Monte Carlo replicate; failures are recorded, not raised."""
    started = time.perf_counter()
    result = ReplicateResult(seed=seed)
    try:
        spec = benchmark_example(example_id)
        mu, y = draw(spec, n, seed)
        grid, estimate, report = fit_selected(y, method, bins, k, taus, cfg, split_frac, seed)
        result.chosen_tau = report.chosen_tau
        result.mse95 = density_mse(estimate.f_hat, grid, spec, mass_interval(spec, 0.95))
        result.mse99 = density_mse(estimate.f_hat, grid, spec, mass_interval(spec, 0.99))
        result.means_mse = means_mse(posterior_means(estimate, grid, y), mu)
        result.modes = count_modes(estimate.f_hat)
    except (DeconvError, np.linalg.LinAlgError) as e:
        logger.warning("replicate seed=%d failed: %s", seed, e)
        result.error = str(e)
    result.seconds = time.perf_counter() - started
    logger.info("replicate seed=%d done in %.1fs", seed, result.seconds)
    return result


def _replicate_worker(args):
    return run_replicate(*args)


def run_benchmark(example_id, n, reps, method=L1, cfg=None, seed=0, jobs=1, bins=DEFAULT_BINS,
                  k=1, taus=None, split_frac=0.75):
    """Run ``reps`` replicates with seeds seed, seed+1, ...; results are in seed order.

    Args:
        example_id: benchmark mixture, 1 to 4.
        n: observations per replicate.
        method: "l1" (ADMM path + AIC) or "l2" (BFGS path + held-out rule).
        jobs: worker processes; 1 runs in-process.
    """
    benchmark_example(example_id)
    if reps < 1:
        raise SimulationError("reps must be at least 1")
    if n < 1:
        raise SimulationError("n must be at least 1")
    if method not in METHODS:
        raise SimulationError(f"unknown method '{method}'; choose l1 or l2")
    taus = tau_grid() if taus is None else np.asarray(taus, dtype=float)
    args = [(example_id, n, method, seed + i, bins, k, taus, cfg, split_frac) for i in range(reps)]
    logger.info("example %d: n=%d reps=%d method=%s bins=%d jobs=%d", example_id, n, reps, method, bins, jobs)
    if jobs > 1 and reps > 1:
        level = logging.getLogger("deconvpath").getEffectiveLevel()
        with ProcessPoolExecutor(max_workers=jobs, initializer=setup_logging, initargs=(level,)) as pool:
            replicates = list(pool.map(_replicate_worker, args))
    else:
        replicates = [_replicate_worker(a) for a in args]
    return BenchResult(example_id=example_id, n=n, method=method, bins=bins, k=k, base_seed=seed,
                       replicates=replicates)


def bin_sensitivity(example_id, n, reps, method=L1, bins_values=(100, 250, 500), **kwargs):
    """One BenchResult per number of bins, all on the same replicate seeds."""
    if not bins_values:
        raise SimulationError("no bin counts given")
    return [run_benchmark(example_id, n, reps, method=method, bins=int(bins), **kwargs)
            for bins in bins_values]
