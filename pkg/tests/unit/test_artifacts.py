"""Unit tests for artifact files."""

import json

import numpy as np
import pytest

from core import ValidationError
from core.artifacts import (
    MANIFEST_NAME,
    format_report,
    read_field,
    read_field_on,
    sha256_file,
    write_field,
    write_field_csv,
    write_json,
    write_manifest,
    write_points_csv,
    write_report,
    write_table_csv,
)
from core.grid import ScalarField, build_grid
from models.reports import ExperimentReport

pytestmark = pytest.mark.unit


@pytest.fixture
def report():
    return ExperimentReport(
        name="density",
        fingerprint={"n": 2, "h": 0.03125},
        tables={"profile": [{"radius": 0.25, "density": 0.5}]},
        summary={"regular": True},
        tolerances={"band": 0.1},
        passed=True,
        wall_time=1.5,
    )


def test_field_text_format(tmp_path, grid_1d):
    field = ScalarField.from_function(grid_1d, lambda x: x[:, 0])
    path = write_field(tmp_path / "w.txt", field)
    lines = path.read_text().splitlines()
    assert lines[0] == "1 0.03125 65"
    assert len(lines) == 66
    assert float(lines[1]) == -1.0

    loaded = read_field(path)
    assert loaded.grid == grid_1d
    np.testing.assert_array_equal(loaded.values, field.values)


def test_read_field_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 0.5\n0.0\n")
    with pytest.raises(ValidationError, match="header"):
        read_field(path)


def test_read_field_rejects_wrong_value_count(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text("1 0.25 9\n0.0\n1.0\n")
    with pytest.raises(ValidationError, match="values"):
        read_field(path)


def test_read_missing_field(tmp_path):
    with pytest.raises(ValidationError, match="cannot read"):
        read_field(tmp_path / "missing.txt")


def test_read_field_on_checks_grid(tmp_path, grid_2d):
    path = write_field(tmp_path / "w.txt", ScalarField.zeros(grid_2d))
    assert read_field_on(path, grid_2d).grid is grid_2d
    with pytest.raises(ValidationError):
        read_field_on(path, build_grid(2, 1.0, 33))


def test_field_csv(tmp_path):
    grid = build_grid(2, 1.0, 9)
    path = write_field_csv(tmp_path / "w.csv", ScalarField.zeros(grid))
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,value"
    assert lines[1] == "-1.0,-1.0,0.0"
    assert len(lines) == 82


def test_points_csv(tmp_path):
    path = write_points_csv(tmp_path / "fb.csv", np.array([[0.0]]), 1)
    assert path.read_text().splitlines() == ["x1", "0.0"]


def test_table_csv_columns_and_cells(tmp_path):
    rows = [{"a": 1, "b": None}, {"b": True, "c": [0.5, 1.0]}]
    path = write_table_csv(tmp_path / "t.csv", rows)
    assert path.read_text().splitlines() == ["a,b,c", "1,,", ",true,0.5 1.0"]


def test_write_json_is_sorted(tmp_path):
    path = write_json(tmp_path / "x.json", {"b": 1, "a": 2})
    assert path.read_text().index('"a"') < path.read_text().index('"b"')


def test_report_excludes_wall_time(tmp_path, report):
    written = write_report(tmp_path, report)
    names = sorted(p.name for p in written)
    assert names == ["density.csv", "density.json", "density.txt"]
    data = json.loads((tmp_path / "density.json").read_text())
    assert "wall_time" not in data
    assert data["passed"] is True


def test_report_bytes_are_deterministic(tmp_path, report):
    first = write_report(tmp_path / "a", report)[0].read_bytes()
    slower = report.model_copy(update={"wall_time": 99.0})
    second = write_report(tmp_path / "b", slower)[0].read_bytes()
    assert first == second


def test_report_with_several_tables(tmp_path, report):
    report.tables["extra"] = [{"k": 1}]
    names = sorted(p.name for p in write_report(tmp_path, report))
    assert "density_profile.csv" in names
    assert "density_extra.csv" in names


def test_format_report_status(report):
    assert format_report(report).startswith("density: PASS")
    control = report.model_copy(update={"passed": False, "asserted": False})
    assert "negative control" in format_report(control)
    aborted = report.model_copy(update={"passed": None, "aborted": True})
    assert format_report(aborted).startswith("density: ABORTED")


def test_manifest_indexes_every_file(tmp_path):
    (tmp_path / "reports").mkdir()
    (tmp_path / "reports" / "a.txt").write_text("a")
    (tmp_path / "summary.json").write_text("{}")
    manifest = write_manifest(tmp_path, "verify run.json", 0)
    assert [e.path for e in manifest.artifacts] == ["reports/a.txt", "summary.json"]
    assert manifest.artifacts[0].sha256 == sha256_file(tmp_path / "reports" / "a.txt")
    data = json.loads((tmp_path / MANIFEST_NAME).read_text())
    assert data["exit_code"] == 0
    assert data["command"] == "verify run.json"
