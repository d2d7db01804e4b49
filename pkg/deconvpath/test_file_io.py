"""Tests for reading samples/estimates and writing artifacts."""
import inspect
import json
import os

import numpy as np
import pytest

from deconvpath.errors import InputError
from deconvpath.file_reader import read_estimate_csv, read_samples, t_to_z
from deconvpath.file_writer import Provenance, write_estimate_csv, write_json
from deconvpath.grid import build_grid, build_kernel
from deconvpath.objective import shift_to_density


def test_read_samples_skips_comments_and_blank_lines(tmp_path):
    path = tmp_path / "z.txt"
    path.write_text("# header\n1.5\n\n-2, 3\n4e-1 5\n")
    np.testing.assert_array_equal(read_samples(str(path)), [1.5, -2.0, 3.0, 0.4, 5.0])


def test_malformed_number_cites_line(tmp_path):
    path = tmp_path / "z.txt"
    path.write_text("1\n2\n3\n4\n5\n6\nabc\n8\n")
    with pytest.raises(InputError, match="line 7") as excinfo:
        read_samples(str(path))
    assert excinfo.value.line == 7


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="File not found"):
        read_samples(str(tmp_path / "nope.txt"))


def test_t_to_z():
    assert t_to_z(np.array([0.0]), 5.0)[0] == pytest.approx(0.0)
    np.testing.assert_allclose(t_to_z(np.array([-2.0, 1.0, 3.0]), 1e8), [-2.0, 1.0, 3.0], atol=1e-6)
    z = t_to_z(np.array([-4.0, 4.0]), 3.0)
    assert z[0] == pytest.approx(-z[1])
    assert abs(z[1]) < 4.0


def test_estimate_csv_round_trip(tmp_path):
    y = np.random.default_rng(0).normal(size=400)
    grid = build_grid(y, bins=20)
    kernel = build_kernel(grid)
    estimate = shift_to_density(np.log(grid.counts + 1.0), grid, kernel)
    path = str(tmp_path / "estimate.csv")
    write_estimate_csv(path, grid, estimate, Provenance(flags="fit --tau 1", seed=0))
    with open(path, encoding="utf-8") as f:
        assert f.readline().startswith("# deconvpath ")
    read_grid, f_hat = read_estimate_csv(path)
    np.testing.assert_array_equal(f_hat, estimate.f_hat)
    np.testing.assert_array_equal(read_grid.midpoints, grid.midpoints)
    assert read_grid.width == pytest.approx(grid.width)


def test_estimate_csv_schema_is_checked(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(InputError, match="expected columns"):
        read_estimate_csv(str(path))


def test_json_is_sorted_and_carries_provenance(tmp_path):
    path = str(tmp_path / "out" / "report.json")
    write_json(path, {"b": 1, "a": 0.1}, Provenance(flags="path", seed=3))
    assert os.path.exists(path)
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    assert data["provenance"]["seed"] == 3
    assert list(data) == sorted(data)


def test_json_writes_non_finite_values_as_null(tmp_path):
    path = tmp_path / "diagnostics.json"
    data = {"primal_res": float("nan"), "objective": float("inf"),
            "entries": [{"dual_res": np.float64("nan"), "tau": 1.0}]}
    write_json(str(path), data, Provenance(flags="fit"))
    text = path.read_text()
    assert "NaN" not in text and "Infinity" not in text

    def reject(token):
        raise ValueError(token)

    loaded = json.loads(text, parse_constant=reject)
    assert loaded["primal_res"] is None
    assert loaded["objective"] is None
    assert loaded["entries"] == [{"dual_res": None, "tau": 1.0}]


@pytest.mark.parametrize("function", [read_samples, t_to_z, read_estimate_csv])
def test_reader_functions_are_annotated(function):
    signature = inspect.signature(function)
    assert signature.return_annotation is not inspect.Signature.empty
    assert all(p.annotation is not inspect.Parameter.empty for p in signature.parameters.values())
