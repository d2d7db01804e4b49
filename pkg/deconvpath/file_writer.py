"""Writing CSV and JSON artifacts.

Every artifact starts with a provenance record (package version, the
flags of the run and its seed). Floats are written with repr() so they
round-trip exactly; nothing time-dependent is written.
"""
import csv
import json
import math
import os
from dataclasses import dataclass

from deconvpath import __version__


@dataclass(frozen=True)
class Provenance:
    flags: str
    seed: int = None
    version: str = __version__

    def header(self):
        return f"# deconvpath {self.version} flags={self.flags} seed={self.seed}\n"

    def to_dict(self):
        return {"version": self.version, "flags": self.flags, "seed": self.seed}


def _num(value):
    return repr(float(value))


def _write_csv(filepath, provenance, columns, rows):
    os.makedirs(os.path.dirname(os.path.abspath(filepath)), exist_ok=True)
    with open(filepath, "w", encoding="utf-8", newline="") as f:
        f.write(provenance.header())
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    return filepath


def _finite_or_none(value):
    """Replace NaN and infinities (at any depth) with None so the output is strict JSON."""
    if isinstance(value, dict):
        return {key: _finite_or_none(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_none(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(filepath, data, provenance):
    os.makedirs(os.path.dirname(os.path.abspath(filepath)), exist_ok=True)
    payload = _finite_or_none(dict(data))
    payload["provenance"] = provenance.to_dict()
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")
    return filepath


def write_estimate_csv(filepath, grid, estimate, provenance):
    rows = ((_num(x), _num(f), _num(m)) for x, f, m in zip(grid.midpoints, estimate.f_hat, estimate.m_hat))
    return _write_csv(filepath, provenance, ("midpoint", "f_hat", "m_hat"), rows)


def write_path_csv(filepath, path, provenance):
    """Long format: one row per (tau, midpoint)."""
    def rows():
        for entry in path.entries:
            tau = _num(entry.tau)
            est = entry.estimate
            for x, f, m in zip(path.grid.midpoints, est.f_hat, est.m_hat):
                yield tau, _num(x), _num(f), _num(m)
    return _write_csv(filepath, provenance, ("tau", "midpoint", "f_hat", "m_hat"), rows())


def write_grid_csv(filepath, grid, provenance):
    rows = ((_num(x), str(int(c))) for x, c in zip(grid.midpoints, grid.counts))
    return _write_csv(filepath, provenance, ("midpoint", "count"), rows)


def write_means_csv(filepath, means, provenance):
    rows = ((_num(y), _num(mu)) for y, mu in zip(means.y, means.mu_hat))
    return _write_csv(filepath, provenance, ("y", "mu_hat"), rows)


def write_bench_csv(filepath, results, provenance):
    """One row per replicate of every BenchResult in ``results``."""
    columns = ("example", "n", "method", "bins", "seed", "mse95", "mse99", "means_mse",
               "chosen_tau", "modes", "error")
    def rows():
        for bench in results:
            for rep in bench.replicates:
                yield (str(bench.example_id), str(bench.n), bench.method, str(bench.bins), str(rep.seed),
                       _num(rep.mse95), _num(rep.mse99), _num(rep.means_mse), _num(rep.chosen_tau),
                       str(rep.modes), rep.error or "")
    return _write_csv(filepath, provenance, columns, rows())
