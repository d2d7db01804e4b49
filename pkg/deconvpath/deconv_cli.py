"""Main CLI for deconvpath.

Run as the ``deconv`` console script or as a module:
    python -m deconvpath.deconv_cli fit --input z.txt --tau 10
"""
import logging
import os
import sys

import numpy as np

from deconvpath.cli_interaction import build_run_config, parse_args
from deconvpath.color_utils import colorize_error, colorize_success, colorize_warning, highlight_json
from deconvpath.config import load_config
from deconvpath.errors import DeconvError, PathError, SolverError
from deconvpath.file_reader import read_estimate_csv, read_samples
from deconvpath.file_writer import (
    Provenance, write_bench_csv, write_estimate_csv, write_grid_csv, write_json,
    write_means_csv, write_path_csv,
)
from deconvpath.formatting import print_bench_table, print_fit_summary, print_path_table, print_selection
from deconvpath.grid import build_grid, build_kernel
from deconvpath.log_utils import setup_logging
from deconvpath.objective import PenaltySpec, SolveDiagnostics, shift_to_density
from deconvpath.path import compute_path_for_taus, tau_grid
from deconvpath.selection import aic_select, heldout_select
from deconvpath.simulate import bin_sensitivity, run_benchmark
from deconvpath.solvers import cold_start, solve
from deconvpath.tweedie import posterior_means

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FLAGGED = 2


def _provenance(run):
    return Provenance(flags=run.flags, seed=run.seed)


def _out(run, name):
    return os.path.join(run.out, name)


def _fit_once(grid, kernel, spec, cfg):
    """Solve at one tau; a solver failure gives a flagged estimate instead of an exception."""
    try:
        return solve(grid, kernel, spec, cfg=cfg)
    except SolverError as e:
        best = getattr(e, "best", None)
        theta = best if best is not None else cold_start(grid)
        logger.warning("solve at tau=%g failed: %s", spec.tau, e)
        return shift_to_density(theta, grid, kernel, spec, SolveDiagnostics(converged=False, message=str(e)))


def cmd_fit(run):
    """Fit at a fixed tau; writes estimate.csv and diagnostics.json."""
    samples = read_samples(run.input, run.t_df)
    grid = build_grid(samples, run.bins)
    kernel = build_kernel(grid)
    spec = PenaltySpec(k=run.order, q=run.q, tau=run.tau)
    estimate = _fit_once(grid, kernel, spec, run.solver)
    provenance = _provenance(run)
    write_estimate_csv(_out(run, "estimate.csv"), grid, estimate, provenance)
    diagnostics = estimate.diagnostics.to_dict()
    diagnostics.update({"tau": run.tau, "k": run.order, "penalty": spec.name, "bins": grid.size, "n": grid.n})
    write_json(_out(run, "diagnostics.json"), diagnostics, provenance)
    print_fit_summary(estimate, grid)
    return EXIT_OK if estimate.diagnostics.converged else EXIT_FLAGGED


def _path_summary(path):
    norms = path.penalty_norms()
    return {
        "k": path.k,
        "penalty": f"l{path.q}",
        "bins": path.grid.size,
        "n": path.grid.n,
        "entries": [
            {"tau": entry.tau, "converged": entry.converged, "penalty_norm": float(norm),
             "iterations": entry.estimate.diagnostics.iterations,
             "objective": entry.estimate.diagnostics.objective,
             "mass_before": entry.estimate.diagnostics.mass_before,
             "message": entry.estimate.diagnostics.message}
            for entry, norm in zip(path.entries, norms)
        ],
    }


def cmd_path(run):
    """Warm-started path; writes path.csv, grid.csv, path_summary.json and, with --select,
    selection.json plus estimate.csv for the chosen tau."""
    samples = read_samples(run.input, run.t_df)
    grid = build_grid(samples, run.bins)
    kernel = build_kernel(grid)
    tau_min, tau_max, count = run.tau_grid
    taus = tau_grid(tau_max, tau_min, count)
    path = compute_path_for_taus(grid, kernel, run.order, run.q, taus, run.solver)
    provenance = _provenance(run)
    write_path_csv(_out(run, "path.csv"), path, provenance)
    write_grid_csv(_out(run, "grid.csv"), grid, provenance)
    write_json(_out(run, "path_summary.json"), _path_summary(path), provenance)

    report = None
    if run.select == "aic":
        report = aic_select(path, grid, kernel)
    elif run.select == "heldout":
        report = heldout_select(samples, run.bins, run.order, taus, split_frac=run.split_frac,
                                seed=run.seed, cfg=run.solver, q=run.q)
    print_path_table(path, report)
    if report is not None:
        write_json(_out(run, "selection.json"), report.to_dict(), provenance)
        write_estimate_csv(_out(run, "estimate.csv"), grid, path.entry_at(report.chosen_tau).estimate, provenance)
        print_selection(report)
        print(colorize_success(f"Selected tau = {report.chosen_tau:.6g} ({report.method})"))
    flagged = len(path.entries) - len(path.converged_entries())
    if flagged:
        print(colorize_warning(f"{flagged} of {len(path.entries)} path entries did not converge"))
        return EXIT_FLAGGED
    return EXIT_OK


def cmd_simulate(run):
    """Monte Carlo benchmark; writes bench.csv and bench.json."""
    tau_min, tau_max, count = run.tau_grid
    options = dict(cfg=run.solver, seed=run.seed, jobs=run.jobs, k=run.order,
                   taus=tau_grid(tau_max, tau_min, count), split_frac=run.split_frac)
    if run.bins_sweep:
        results = bin_sensitivity(run.example, run.n, run.reps, method=run.method,
                                  bins_values=run.bins_sweep, **options)
    else:
        results = [run_benchmark(run.example, run.n, run.reps, method=run.method, bins=run.bins, **options)]
    provenance = _provenance(run)
    write_bench_csv(_out(run, "bench.csv"), results, provenance)
    write_json(_out(run, "bench.json"), {"results": [bench.to_dict() for bench in results]}, provenance)
    print_bench_table(results)
    failed = sum(len(bench.replicates) - len(bench.successful()) for bench in results)
    if failed:
        print(colorize_warning(f"{failed} replicate(s) failed; see bench.csv"))
        return EXIT_FLAGGED
    return EXIT_OK


def cmd_means(run):
    """Posterior means for every sample under a fitted estimate; writes means.csv."""
    grid, f_hat = read_estimate_csv(run.estimate)
    y = read_samples(run.input, run.t_df)
    means = posterior_means(f_hat, grid, y)
    write_means_csv(_out(run, "means.csv"), means, _provenance(run))
    summary = {"observations": int(means.y.size), "fallback": int(np.sum(means.fallback)),
               "output": _out(run, "means.csv")}
    print(highlight_json(summary))
    return EXIT_FLAGGED if means.any_fallback else EXIT_OK


COMMAND_HANDLERS = {
    "fit": cmd_fit,
    "path": cmd_path,
    "simulate": cmd_simulate,
    "means": cmd_means,
}


def main(argv=None):
    """Main entry point for the deconv CLI; returns the process exit code."""
    setup_logging()
    try:
        args = parse_args(argv)
        run = build_run_config(args, load_config(args.config))
        return COMMAND_HANDLERS[run.command](run)
    except (SolverError, PathError) as e:
        print(colorize_error(f"Error: {e}"), file=sys.stderr)
        return EXIT_FLAGGED
    except DeconvError as e:
        print(colorize_error(f"Error: {e}"), file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(colorize_error(f"Error: {e}"), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
