"""Reading sample files and fitted-estimate CSVs."""
from __future__ import annotations

import csv
import os

import numpy as np
from scipy.stats import norm
from scipy.stats import t as student_t

from deconvpath.errors import InputError
from deconvpath.grid import Grid

ESTIMATE_COLUMNS = ("midpoint", "f_hat", "m_hat")


def _open_lines(filepath: str) -> list[str]:
    if not os.path.exists(filepath):
        raise InputError(f"File not found at '{filepath}'.")
    if not os.path.isfile(filepath):
        raise InputError(f"Path '{filepath}' is a directory, not a file.")
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            return f.read().splitlines()
    except PermissionError as e:
        raise InputError(f"Permission denied when trying to read '{filepath}'.") from e
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"Cannot read '{filepath}': {e}") from e


def read_samples(filepath: str, t_df: float | None = None) -> np.ndarray:
    """
    Read observations from a text file.

    Numbers are separated by whitespace or commas, any number per line.
    Blank lines and lines starting with '#' are skipped.

    Args:
        filepath: Path to the samples file.
        t_df: If given, the values are t-statistics with this many degrees
            of freedom and are converted to z-scores.

    Returns:
        1-D float array of samples.

    Raises:
        InputError: unreadable file or a malformed number; the message
            cites the 1-based line number.
    """
    values = []
    for lineno, line in enumerate(_open_lines(filepath), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        for token in stripped.replace(",", " ").split():
            try:
                value = float(token)
            except ValueError as e:
                raise InputError(f"{filepath}: line {lineno}: malformed number '{token}'", line=lineno) from e
            if not np.isfinite(value):
                raise InputError(f"{filepath}: line {lineno}: non-finite value '{token}'", line=lineno)
            values.append(value)
    if not values:
        raise InputError(f"{filepath}: no samples found")
    samples = np.array(values)
    return t_to_z(samples, t_df) if t_df is not None else samples


def t_to_z(t: np.ndarray, df: float) -> np.ndarray:
    """z = Phi^-1(T_df(t)), using the tail on the side of t's sign."""
    if not df > 0:
        raise InputError("degrees of freedom must be positive")
    t = np.asarray(t, dtype=float)
    z = np.where(t < 0, norm.ppf(student_t.cdf(t, df)), norm.isf(student_t.sf(t, df)))
    if not np.all(np.isfinite(z)):
        raise InputError("t-statistic too extreme to convert to a z-score")
    return z


def read_estimate_csv(filepath: str) -> tuple[Grid, np.ndarray]:
    """
    Read an estimate CSV written by ``fit`` or ``path --select``.

    Returns:
        (grid, f_hat): a count-free Grid on the estimate's midpoints and
        the fitted density.
    """
    rows = [line for line in _open_lines(filepath) if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.reader(rows)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != ESTIMATE_COLUMNS:
        raise InputError(f"{filepath}: expected columns {','.join(ESTIMATE_COLUMNS)}")
    midpoints, f_hat = [], []
    for i, row in enumerate(reader, start=2):
        if len(row) != len(ESTIMATE_COLUMNS):
            raise InputError(f"{filepath}: data row {i} has {len(row)} fields", line=i)
        try:
            midpoints.append(float(row[0]))
            f_hat.append(float(row[1]))
        except ValueError as e:
            raise InputError(f"{filepath}: data row {i}: malformed number", line=i) from e
    if len(midpoints) < 2:
        raise InputError(f"{filepath}: estimate needs at least two midpoints")
    midpoints = np.array(midpoints)
    size = midpoints.size
    width = (midpoints[-1] - midpoints[0]) / (size - 1)
    grid = Grid(midpoints=midpoints, width=width, counts=np.zeros(size, dtype=np.int64), n=0)
    return grid, np.array(f_hat)
