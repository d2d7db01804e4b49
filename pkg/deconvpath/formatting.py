"""Formatting and display utilities for deconvpath."""
import argparse
import sys

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

# benchmark MSEs are reported times 100
MSE_DISPLAY_SCALE = 100.0


def _console(to_stderr=False):
    return Console(file=sys.stderr if to_stderr else None)


def _fmt(value, spec=".4g"):
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return "n/a"
    return format(value, spec)


def print_fit_summary(estimate, grid, to_stderr=False):
    """Panel with the solve diagnostics of a single fit."""
    diag = estimate.diagnostics
    status = "[green]converged[/green]" if diag.converged else "[yellow]NOT converged[/yellow]"
    lines = [
        f"penalty  {estimate.penalty.name if estimate.penalty else 'n/a'}  "
        f"k={estimate.penalty.k if estimate.penalty else 'n/a'}  tau={_fmt(estimate.tau)}",
        f"status   {status} after {diag.iterations} iterations ({diag.inner_iterations} inner)",
        f"objective {_fmt(diag.objective, '.10g')}",
        f"mass before renormalization {_fmt(diag.mass_before, '.8f')}",
        f"bins {grid.size}  width {_fmt(grid.width)}  n {grid.n}",
    ]
    if diag.message:
        lines.append(diag.message)
    _console(to_stderr).print(Panel("\n".join(lines), title="[bold green]Fit[/bold green]",
                                    border_style="green", expand=False))


def print_path_table(path, selection=None, to_stderr=False):
    """One row per tau with its penalty norm and convergence flag."""
    table = Table(title=f"Deconvolution path (l{path.q}, k={path.k})")
    table.add_column("tau", justify="right")
    table.add_column(f"||D^(k+1) theta||_{path.q}", justify="right")
    table.add_column("iterations", justify="right")
    table.add_column("status")
    chosen = selection.chosen_tau if selection is not None else None
    for entry, norm in zip(path.entries, path.penalty_norms()):
        status = "ok" if entry.converged else "[yellow]flagged[/yellow]"
        if chosen is not None and entry.tau == chosen:
            status += " [bold magenta]<- selected[/bold magenta]"
        table.add_row(_fmt(entry.tau), _fmt(norm), str(entry.estimate.diagnostics.iterations), status)
    _console(to_stderr).print(table)


def print_selection(report, to_stderr=False):
    table = Table(title=f"Selection ({report.method})")
    table.add_column("tau", justify="right")
    table.add_column("score", justify="right")
    table.add_column("converged")
    for row in report.scores:
        style = "bold magenta" if row.tau == report.chosen_tau else None
        table.add_row(_fmt(row.tau), _fmt(row.score, ".8g"), "yes" if row.converged else "no", style=style)
    _console(to_stderr).print(table)


def print_bench_table(results, to_stderr=False):
    """Aggregated benchmark scores, MSEs times 100."""
    table = Table(title="Benchmark (MSE x 100, mean ± s.e.)")
    for name in ("example", "n", "method", "bins", "reps", "failed", "mse95", "mse99", "means mse"):
        table.add_column(name, justify="right")
    for bench in results:
        agg = bench.aggregates()

        def cell(name, scale=MSE_DISPLAY_SCALE):
            return f"{_fmt(scale * agg[name]['mean'])} ± {_fmt(scale * agg[name]['stderr'])}"

        table.add_row(str(bench.example_id), str(bench.n), bench.method, str(bench.bins),
                      str(len(bench.replicates)), str(len(bench.replicates) - len(bench.successful())),
                      cell("mse95"), cell("mse99"), cell("means_mse", scale=1.0))
    _console(to_stderr).print(table)


class ColoredHelpFormatter(argparse.RawDescriptionHelpFormatter):
    """Custom argparse formatter with colored output."""
    def __init__(self, prog):
        super().__init__(prog, max_help_position=36)

    def _format_action(self, action):
        result = super()._format_action(action)
        for opt_str in action.option_strings:
            result = result.replace(opt_str, f'\033[1;32m{opt_str}\033[0m', 1)
        return result

    def _format_usage(self, usage, actions, groups, prefix):
        text = super()._format_usage(usage, actions, groups, prefix)
        return text.replace('usage:', '\033[1;36musage:\033[0m', 1)
