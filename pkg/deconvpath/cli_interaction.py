"""Argument parsing and run-configuration checks for the deconv CLI."""
import argparse
import shlex
import sys
from dataclasses import dataclass, field

from deconvpath import __version__
from deconvpath.config import DEFAULT_CONFIG, solver_config
from deconvpath.errors import DeconvError, UsageError
from deconvpath.formatting import ColoredHelpFormatter
from deconvpath.solvers import SolverConfig

DESCRIPTION = """deconv: empirical-Bayes deconvolution of Gaussian mixtures.

Bins the observations, fits a penalized Poisson surrogate likelihood for
the log mixing density, and reports the estimate, a whole path of
estimates over tau, or Monte Carlo benchmark scores.

-----------------------------------------------------------------------
SUBCOMMANDS & EXAMPLES:
-----------------------------------------------------------------------
  fit       Fit at one tau.
              deconv fit --input z.txt --penalty l1 --tau 50
  path      Fit a warm-started path over a log-spaced tau grid.
              deconv path --input z.txt --penalty l1 --select aic
              deconv path --input z.txt --tau-grid 1e-3,1e7,50 --select heldout
  simulate  Monte Carlo benchmark on one of the four example mixtures.
              deconv simulate --example 1 --n 2000 --reps 2 --jobs 2
              deconv simulate --example 4 --n 10000 --method l2 --bins-sweep 100,250,500
  means     Posterior means of the latent means from a fitted estimate.
              deconv means --input z.txt --estimate out/estimate.csv

-----------------------------------------------------------------------
EXIT CODES:
-----------------------------------------------------------------------
  0  success
  1  usage or input error
  2  finished, but some solve was flagged as not converged"""

EPILOG = """Defaults come from the JSON config in the user config directory
(override with DECONV_CONFIG or --config). Log level: DECONV_LOG."""


class DeconvArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose errors become UsageError (exit code 1)."""

    def error(self, message):
        raise UsageError(message)


def _add_common(parser):
    parser.add_argument("--input", metavar="FILE", help="Samples file: numbers separated by whitespace or commas.")
    parser.add_argument("--bins", type=int, metavar="D", help="Number of histogram bins (default 250).")
    parser.add_argument("--t-df", type=float, metavar="DF", dest="t_df",
                        help="Treat inputs as t-statistics with DF degrees of freedom and convert to z-scores.")
    parser.add_argument("--out", metavar="DIR", default=".", help="Output directory (default: current directory).")
    parser.add_argument("--seed", type=int, default=0, help="Random seed (default 0).")
    parser.add_argument("--config", metavar="FILE", help="Read defaults from this JSON config file.")


def _add_penalty(parser):
    parser.add_argument("--order", type=int, metavar="K", help="Trend-filtering order k (default 1).")
    parser.add_argument("--penalty", choices=("l1", "l2"), help="Penalty norm (default l2).")


def parse_args(argv=None):
    """Parse the deconv command line."""
    parser = DeconvArgumentParser(prog="deconv", description=DESCRIPTION, epilog=EPILOG,
                                  formatter_class=ColoredHelpFormatter)
    parser.add_argument("--version", action="version", version=f"deconvpath {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{fit,path,simulate,means}",
                                parser_class=DeconvArgumentParser)

    fit = sub.add_parser("fit", help="Fit at a fixed tau.", formatter_class=ColoredHelpFormatter)
    _add_common(fit)
    _add_penalty(fit)
    fit.add_argument("--tau", type=float, help="Penalty weight tau (>= 0).")

    path = sub.add_parser("path", help="Fit a warm-started path over tau.", formatter_class=ColoredHelpFormatter)
    _add_common(path)
    _add_penalty(path)
    path.add_argument("--tau-grid", metavar="MIN,MAX,COUNT", dest="tau_grid",
                      help="Log-spaced tau grid (default 1e-3,1e7,50).")
    path.add_argument("--select", choices=("aic", "heldout"), help="Choose tau: AIC (l1) or held-out (l2).")

    sim = sub.add_parser("simulate", help="Monte Carlo benchmark.", formatter_class=ColoredHelpFormatter)
    _add_common(sim)
    sim.add_argument("--order", type=int, metavar="K", help="Trend-filtering order k (default 1).")
    sim.add_argument("--tau-grid", metavar="MIN,MAX,COUNT", dest="tau_grid",
                     help="Log-spaced tau grid (default 1e-3,1e7,50).")
    sim.add_argument("--example", type=int, required=True, help="Example mixture, 1 to 4.")
    sim.add_argument("--n", type=int, default=10000, help="Observations per replicate (default 10000).")
    sim.add_argument("--reps", type=int, default=1, help="Monte Carlo replicates (default 1).")
    sim.add_argument("--method", choices=("l1", "l2"), default="l1",
                     help="l1: ADMM path + AIC; l2: BFGS path + held-out rule (default l1).")
    sim.add_argument("--jobs", type=int, default=1, help="Worker processes for replicates (default 1).")
    sim.add_argument("--bins-sweep", metavar="D1,D2,...", dest="bins_sweep",
                     help="Repeat the benchmark for each number of bins.")

    means = sub.add_parser("means", help="Posterior means from a fitted estimate.",
                           formatter_class=ColoredHelpFormatter)
    _add_common(means)
    means.add_argument("--estimate", metavar="FILE", help="estimate.csv written by fit or path --select.")

    args = parser.parse_args(sys.argv[1:] if argv is None else argv)
    if args.command is None:
        raise UsageError("missing subcommand; choose one of fit, path, simulate, means")
    args.argv = list(sys.argv[1:] if argv is None else argv)
    return args


@dataclass
class RunConfig:
    """Validated settings for one CLI run."""
    command: str
    input: str = None
    bins: int = 250
    order: int = 1
    penalty: str = "l2"
    tau: float = None
    tau_grid: tuple = (1e-3, 1e7, 50)
    select: str = None
    seed: int = 0
    out: str = "."
    jobs: int = 1
    example: int = None
    n: int = None
    reps: int = None
    method: str = None
    estimate: str = None
    t_df: float = None
    bins_sweep: tuple = None
    split_frac: float = 0.75
    solver: SolverConfig = field(default_factory=SolverConfig)
    flags: str = ""

    @property
    def q(self):
        return 1 if self.penalty == "l1" else 2


def parse_tau_grid(text):
    """'MIN,MAX,COUNT' -> (min, max, count)."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 3:
        raise UsageError("--tau-grid expects MIN,MAX,COUNT")
    try:
        tau_min, tau_max, count = float(parts[0]), float(parts[1]), int(float(parts[2]))
    except ValueError as e:
        raise UsageError(f"--tau-grid: {e}") from e
    if not (tau_max > tau_min > 0):
        raise UsageError("--tau-grid needs 0 < MIN < MAX")
    if count < 2:
        raise UsageError("--tau-grid needs COUNT >= 2")
    return tau_min, tau_max, count


def _parse_bins_sweep(text):
    try:
        values = tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError as e:
        raise UsageError(f"--bins-sweep: {e}") from e
    if not values or min(values) < 2:
        raise UsageError("--bins-sweep needs bin counts >= 2")
    return values


def build_run_config(args, config=None):
    """Merge flags over config defaults and validate everything before any compute."""
    config = config if config is not None else DEFAULT_CONFIG
    try:
        solver = solver_config(config)
    except DeconvError as e:
        raise UsageError(f"invalid solver settings: {e}") from e

    def pick(name, default_key=None):
        value = getattr(args, name, None)
        return value if value is not None else config.get(default_key or name)

    run = RunConfig(command=args.command, flags=shlex.join(getattr(args, "argv", [])), solver=solver)
    run.input = getattr(args, "input", None)
    run.bins = int(pick("bins"))
    run.order = int(pick("order"))
    run.penalty = getattr(args, "penalty", None) or config.get("penalty", "l2")
    run.seed = args.seed
    run.out = args.out
    run.t_df = getattr(args, "t_df", None)
    run.split_frac = float(config.get("split_frac", 0.75))
    grid_text = getattr(args, "tau_grid", None)
    run.tau_grid = parse_tau_grid(grid_text) if grid_text else parse_tau_grid(",".join(map(str, config["tau_grid"])))

    if run.bins < 2:
        raise UsageError("--bins must be at least 2")
    if run.order < 0:
        raise UsageError("--order must be nonnegative")
    if run.penalty not in ("l1", "l2"):
        raise UsageError(f"unknown penalty '{run.penalty}'")
    if run.t_df is not None and not run.t_df > 0:
        raise UsageError("--t-df must be positive")
    if not 0 < run.split_frac < 1:
        raise UsageError("split_frac must lie in (0, 1)")

    if run.command in ("fit", "path", "means") and not run.input:
        raise UsageError(f"{run.command} requires --input")
    if run.command == "fit":
        run.tau = args.tau
        if run.tau is None:
            raise UsageError("fit requires --tau")
        if not run.tau >= 0:
            raise UsageError("--tau must be nonnegative")
    elif run.command == "path":
        run.select = args.select
        if run.select == "aic" and run.q != 1:
            raise UsageError("AIC selection requires l1 path")
    elif run.command == "simulate":
        run.example, run.n, run.reps, run.method, run.jobs = args.example, args.n, args.reps, args.method, args.jobs
        if run.example not in (1, 2, 3, 4):
            raise UsageError(f"unknown example id {run.example}; choose 1, 2, 3 or 4")
        if run.n < 1 or run.reps < 1:
            raise UsageError("--n and --reps must be at least 1")
        if run.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        if args.bins_sweep:
            run.bins_sweep = _parse_bins_sweep(args.bins_sweep)
    elif run.command == "means":
        run.estimate = args.estimate
        if not run.estimate:
            raise UsageError("means requires --estimate")
    return run
