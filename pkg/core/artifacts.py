"""Artifact files: field text format, CSV tables, deterministic JSON, run manifest.

The field text format has one header line ``n h nodes_per_axis`` followed by
one value per line in lexicographic node order.
"""

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from core.exceptions import ValidationError
from core.grid import Grid, ScalarField
from models.reports import ArtifactEntry, ExperimentReport, RunManifest

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
METADATA_NAME = "metadata.json"


def format_float(value: float) -> str:
    """Shortest repr that round-trips."""
    return repr(float(value))


def write_field(path: Path, field: ScalarField) -> Path:
    """Write a field in the text format."""
    grid = field.grid
    lines = [f"{grid.dimension} {format_float(grid.spacing)} {grid.nodes_per_axis}"]
    lines.extend(format_float(v) for v in field.values)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_field(path: Path) -> ScalarField:
    """Read a field written by ``write_field``.

    Raises:
        ValidationError: If the file is missing, malformed or inconsistent
    """
    try:
        with open(path) as f:
            header = f.readline().split()
            values = np.loadtxt(f, dtype=float, ndmin=1)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read field file {path}: {exc}") from exc
    if len(header) != 3:
        raise ValidationError(f"field file {path}: header must be 'n h nodes_per_axis'")
    try:
        n, h, nodes = int(header[0]), float(header[1]), int(header[2])
    except ValueError:
        raise ValidationError(f"field file {path}: malformed header {header}") from None
    grid = Grid(dimension=n, half_width=h * (nodes - 1) / 2, nodes_per_axis=nodes)
    return ScalarField(grid, values)


def read_field_on(path: Path, grid: Grid) -> ScalarField:
    """Read a field file and check it lives on ``grid``."""
    field = read_field(path)
    other = field.grid
    if (
        other.dimension != grid.dimension
        or other.nodes_per_axis != grid.nodes_per_axis
        or not np.isclose(other.spacing, grid.spacing, rtol=1e-9)
    ):
        raise ValidationError(
            f"field file {path} is on grid {other.describe()}, expected {grid.describe()}"
        )
    return ScalarField(grid, field.values)


def _coordinate_header(n: int) -> list[str]:
    return [f"x{k + 1}" for k in range(n)]


def write_field_csv(path: Path, field: ScalarField) -> Path:
    """Coordinates and value per node."""
    grid = field.grid
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([*_coordinate_header(grid.dimension), "value"])
        for coords, value in zip(grid.coordinates, field.values, strict=True):
            writer.writerow([*(format_float(c) for c in coords), format_float(value)])
    return path


def write_points_csv(path: Path, points: np.ndarray, n: int) -> Path:
    """One coordinate row per point."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(_coordinate_header(n))
        for point in np.asarray(points, dtype=float).reshape(-1, n):
            writer.writerow([format_float(c) for c in point])
    return path


def to_jsonable(data: Any) -> Any:
    if isinstance(data, BaseModel):
        return data.model_dump(mode="json")
    return data


def write_json(path: Path, data: Any) -> Path:
    """Sorted-key JSON; identical inputs give identical bytes."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def _columns(rows: list[dict[str, Any]]) -> list[str]:
    columns: list[str] = []
    for row in rows:
        columns.extend(key for key in row if key not in columns)
    return columns


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_cell(v) for v in value)
    return str(value)


def write_table_csv(path: Path, rows: list[dict[str, Any]]) -> Path:
    """CSV of a list of rows; columns in order of first appearance."""
    columns = _columns(rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    return path


def format_table(rows: list[dict[str, Any]]) -> str:
    """Aligned-column text rendering of a table."""
    columns = _columns(rows)
    if not columns:
        return "(empty)"
    cells = [[_short(row.get(c)) for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths, strict=True))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(v.ljust(w) for v, w in zip(r, widths, strict=True)) for r in cells)
    return "\n".join(lines)


def _short(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return "(" + ", ".join(_short(v) for v in value) + ")"
    return _cell(value)


def format_report(report: ExperimentReport) -> str:
    """Human-readable report text."""
    if report.aborted:
        status = "ABORTED"
    elif report.passed:
        status = "PASS"
    else:
        status = "FAIL"
    if not report.asserted:
        status += " (negative control, not asserted)"
    parts = [f"{report.name}: {status}", ""]
    for key, value in sorted(report.tolerances.items()):
        parts.append(f"tolerance {key} = {value:.6g}")
    for key, value in sorted(report.summary.items()):
        parts.append(f"{key} = {_short(value)}")
    for name, rows in report.tables.items():
        parts.extend(["", f"[{name}]", format_table(rows)])
    if report.notes:
        parts.extend(["", *(f"note: {note}" for note in report.notes)])
    return "\n".join(parts) + "\n"


def write_report(reports_dir: Path, report: ExperimentReport) -> list[Path]:
    """JSON, text and one CSV per table."""
    written = [
        write_json(reports_dir / f"{report.name}.json", report),
    ]
    text_path = reports_dir / f"{report.name}.txt"
    text_path.write_text(format_report(report))
    written.append(text_path)
    for table, rows in report.tables.items():
        suffix = "" if len(report.tables) == 1 else f"_{table}"
        written.append(write_table_csv(reports_dir / f"{report.name}{suffix}.csv", rows))
    return written


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(run_dir: Path, command: str, exit_code: int) -> RunManifest:
    """Index every file of the run directory; written last."""
    entries = [
        ArtifactEntry(path=p.relative_to(run_dir).as_posix(), sha256=sha256_file(p))
        for p in sorted(run_dir.rglob("*"))
        if p.is_file() and p != run_dir / MANIFEST_NAME
    ]
    manifest = RunManifest(command=command, exit_code=exit_code, artifacts=entries)
    write_json(run_dir / MANIFEST_NAME, manifest)
    logger.debug(f"Wrote manifest with {len(entries)} artifacts to {run_dir}")
    return manifest
