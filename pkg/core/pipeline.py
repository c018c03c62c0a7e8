"""Run orchestration: build a problem from a RunConfig, solve, verify, sweep.

Every command writes into its own run directory and finishes with
``manifest.json``. Timestamps and durations go to ``metadata.json`` only, so
the remaining artifacts are byte-identical for identical config and seed.
"""

import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from __version__ import __version__
from config.run_config import (
    GRID_SPACING_KEY,
    RunConfig,
    apply_override,
    dump_run_config,
    has_key,
    parse_run_config,
)
from core.artifacts import (
    METADATA_NAME,
    format_float,
    write_field,
    write_field_csv,
    write_json,
    write_manifest,
    write_points_csv,
    write_report,
    write_table_csv,
)
from core.coeff import make_coefficients
from core.exceptions import ConfigError, LabError, NonConvergenceError, ValidationError
from core.fb import extract_geometry
from core.fixtures import boundary_data, closed_form_solution, free_boundary_error, synthetic_field
from core.grid import Grid, ScalarField, build_grid, measure
from core.logging_config import run_scope
from core.metrics import RunMetrics
from core.solver import ObstacleProblemSpec, SolveResult, solve_obstacle
from core.suites import SuiteContext, get_suite
from experiments.convergence import attach_orders
from models.reports import ExperimentReport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGENCE = 3
EXIT_SUITE_FAILURE = 4

CONFIG_NAME = "config.json"
SWEEP_TABLE = "sweep"


@dataclass(frozen=True, eq=False)
class Problem:
    """A validated run: either an obstacle problem or a synthetic field."""

    config: RunConfig
    grid: Grid
    spec: ObstacleProblemSpec | None = None
    synthetic: ScalarField | None = None

    @property
    def seed(self) -> int:
        return self.config.seed if self.config.seed is not None else 0


def build_problem(config: RunConfig) -> Problem:
    """Construct the grid and certify data without solving.

    Raises:
        ValidationError: If a module precondition fails (ellipticity, boundary
            sign, unreadable custom boundary file)
    """
    grid = build_grid(config.grid.n, config.grid.half_width, config.grid.nodes_per_axis)
    if config.synthetic is not None:
        field = synthetic_field(grid, config.synthetic.kind, config.synthetic.params)
        return Problem(config=config, grid=grid, synthetic=field)

    coefficients = make_coefficients(
        grid,
        config.coefficients.family,
        config.coefficients.params,
        rhs_family=config.f.family,
        rhs_params=config.f.params,
    )
    psi = boundary_data(grid, config.boundary.profile, config.boundary.params)
    spec = ObstacleProblemSpec(
        grid=grid,
        coefficients=coefficients,
        boundary=psi,
        tol=config.solver.tol,
        max_iter=config.solver.max_iter,
    )
    return Problem(config=config, grid=grid, spec=spec)


def validate_problem(config: RunConfig) -> dict[str, Any]:
    """Per-module preconditions of a config, as a summary for ``validate-config``."""
    problem = build_problem(config)
    summary: dict[str, Any] = {"grid": problem.grid.describe(), "suites": [s.name for s in config.suites]}
    if problem.spec is not None:
        c = problem.spec.coefficients
        summary.update(
            {
                "lambda": c.lam,
                "Lambda": c.Lam,
                "lambda_star": c.lam_star,
                "Lambda_star": c.Lam_star,
                "residual_target": problem.spec.tol * problem.spec.scale,
            }
        )
    else:
        summary["synthetic"] = str(config.synthetic.kind)
    return summary


def _context(problem: Problem, result: SolveResult | None) -> SuiteContext:
    config = problem.config
    if problem.synthetic is not None:
        return SuiteContext.from_field(
            problem.synthetic,
            tau_pos=config.tau_pos or 0.0,
            seed=problem.seed,
            label=str(config.synthetic.kind),
        )
    return SuiteContext.from_result(result, problem.spec, seed=problem.seed, tau_pos=config.tau_pos)


def _solve_row(problem: Problem, result: SolveResult) -> dict[str, Any]:
    """Scalar outcome of a solve, with closed-form errors when available."""
    config = problem.config
    geometry = extract_geometry(result.w, config.tau_pos)
    row: dict[str, Any] = {
        **result.summary().model_dump(),
        "h": problem.grid.spacing,
        "contact_measure": measure(problem.grid, geometry.contact),
        "free_boundary_nodes": int(geometry.free_boundary_indices.size),
    }
    exact = closed_form_solution(
        problem.grid,
        config.boundary.profile,
        config.boundary.params,
        config.coefficients.family,
        config.coefficients.params,
        config.f.family,
        config.f.params,
    )
    if exact is not None:
        row["error_inf"] = float(np.max(np.abs(result.w.values - exact.values)))
        row["fb_error"] = free_boundary_error(
            geometry.free_boundary_points, config.boundary.profile, config.boundary.params
        )
    return row


def _write_solution(run_dir: Path, problem: Problem, result: SolveResult) -> dict[str, Any]:
    row = _solve_row(problem, result)
    write_field(run_dir / "solution.txt", result.w)
    write_field_csv(run_dir / "solution.csv", result.w)
    write_json(run_dir / "summary.json", row)
    geometry = extract_geometry(result.w, problem.config.tau_pos)
    write_points_csv(run_dir / "free_boundary.csv", geometry.free_boundary_points, problem.grid.dimension)
    return row


def _write_field_artifacts(run_dir: Path, problem: Problem) -> None:
    field = problem.synthetic
    geometry = extract_geometry(field, problem.config.tau_pos or 0.0)
    write_field(run_dir / "field.txt", field)
    write_field_csv(run_dir / "field.csv", field)
    write_json(
        run_dir / "summary.json",
        {"synthetic": str(problem.config.synthetic.kind), **geometry.counts()},
    )
    write_points_csv(run_dir / "free_boundary.csv", geometry.free_boundary_points, problem.grid.dimension)


def write_metadata(run_dir: Path, metrics: RunMetrics, **extra: Any) -> Path:
    """Timestamps, durations and versions; the only nondeterministic artifact."""
    data = {
        "obstaclelab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        **metrics.get_metrics(),
        **extra,
    }
    return write_json(run_dir / METADATA_NAME, data)


def _finish(run_dir: Path, command: str, exit_code: int, metrics: RunMetrics, **extra: Any) -> int:
    write_metadata(run_dir, metrics, **extra)
    write_manifest(run_dir, command, exit_code)
    return exit_code


def _solve(problem: Problem, run_dir: Path, metrics: RunMetrics) -> tuple[SolveResult | None, int]:
    """Solve and write the solution artifacts; (result, exit code)."""
    start = time.perf_counter()
    try:
        result = solve_obstacle(problem.spec, problem.config.solver.method)
    except NonConvergenceError as exc:
        metrics.record("solve", "error", time.perf_counter() - start)
        if exc.result is not None:
            write_json(run_dir / "summary.json", exc.result.summary())
        return None, EXIT_NONCONVERGENCE
    metrics.record("solve", "ok", time.perf_counter() - start)
    _write_solution(run_dir, problem, result)
    return result, EXIT_OK


def run_solve(config: RunConfig, run_dir: Path, command: str = "solve") -> int:
    """Solve one config; exit 0 on convergence, 3 otherwise (summary still written)."""
    problem = build_problem(config)
    run_dir.mkdir(parents=True, exist_ok=True)
    metrics = RunMetrics()
    dump_run_config(config, run_dir / CONFIG_NAME)
    if problem.synthetic is not None:
        _write_field_artifacts(run_dir, problem)
        return _finish(run_dir, command, EXIT_OK, metrics)
    _, exit_code = _solve(problem, run_dir, metrics)
    logger.info(f"Solve finished with exit code {exit_code}; artifacts in {run_dir}")
    return _finish(run_dir, command, exit_code, metrics)


def run_suites(
    context: SuiteContext, config: RunConfig, workers: int = 1, metrics: RunMetrics | None = None
) -> list[ExperimentReport]:
    """Execute the configured suites; reports come back in config order."""

    def job(entry) -> ExperimentReport:
        suite = get_suite(entry.name)()
        report = suite.execute(context, entry.params, asserted=entry.asserted)
        if metrics is not None:
            outcome = "aborted" if report.aborted else ("passed" if report.passed else "failed")
            metrics.record(f"suite:{report.name}", outcome, report.wall_time)
        return report

    if workers <= 1 or len(config.suites) <= 1:
        return [job(entry) for entry in config.suites]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, config.suites))


def run_verify(config: RunConfig, run_dir: Path, workers: int = 1, command: str = "verify") -> int:
    """Solve (unless synthetic), run every suite and write reports.

    Returns:
        0 if every asserted suite passed, 3 on nonconvergence, 4 otherwise
    """
    if not config.suites:
        raise ValidationError("config lists no suites to verify")
    problem = build_problem(config)
    run_dir.mkdir(parents=True, exist_ok=True)
    metrics = RunMetrics()
    dump_run_config(config, run_dir / CONFIG_NAME)

    result = None
    if problem.synthetic is not None:
        _write_field_artifacts(run_dir, problem)
    else:
        result, exit_code = _solve(problem, run_dir, metrics)
        if result is None:
            return _finish(run_dir, command, exit_code, metrics)

    reports = run_suites(_context(problem, result), config, workers, metrics)
    reports_dir = run_dir / "reports"
    for report in reports:
        write_report(reports_dir, report)
    index = [
        {
            "suite": r.name,
            "passed": r.passed,
            "asserted": r.asserted,
            "aborted": r.aborted,
            "blocking": r.blocking_failure,
        }
        for r in reports
    ]
    write_json(reports_dir / "index.json", index)
    failures = [r.name for r in reports if r.blocking_failure]
    exit_code = EXIT_SUITE_FAILURE if failures else EXIT_OK
    if failures:
        logger.error(f"Asserted suite(s) failed: {', '.join(failures)}")
    else:
        logger.info(f"All {sum(r.asserted for r in reports)} asserted suite(s) passed")
    return _finish(
        run_dir,
        command,
        exit_code,
        metrics,
        suite_wall_times={r.name: round(r.wall_time, 4) for r in reports},
    )


def _value_label(value: Any) -> str:
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return str(value)


def _sweep_job(config_data: dict[str, Any], key: str, value: Any, run_dir: str) -> tuple[dict[str, Any], float]:
    """One sweep point; runs in a worker process, never raises."""
    start = time.perf_counter()
    row: dict[str, Any] = {key: value, "run": Path(run_dir).name}
    target = Path(run_dir)
    with run_scope(target.name):
        _run_sweep_point(config_data, key, value, target, row)
    return row, time.perf_counter() - start


def _run_sweep_point(config_data: dict[str, Any], key: str, value: Any, target: Path, row: dict[str, Any]) -> None:
    """Fill ``row`` for one sweep point. Errors become an error row.

    A bug in one point (anything not a ``LabError``) is logged with its
    traceback and recorded with exit code 1; the other points still run.
    """
    try:
        config = apply_override(parse_run_config(config_data), key, value)
        problem = build_problem(config)
        target.mkdir(parents=True, exist_ok=True)
        metrics = RunMetrics()
        dump_run_config(config, target / CONFIG_NAME)
        if problem.synthetic is not None:
            _write_field_artifacts(target, problem)
            exit_code, result = EXIT_OK, None
        else:
            result, exit_code = _solve(problem, target, metrics)
        if result is not None:
            row.update(_solve_row(problem, result))
        if exit_code == EXIT_OK and config.suites:
            reports = run_suites(_context(problem, result), config, 1, metrics)
            for report in reports:
                write_report(target / "reports", report)
                row[f"suite_{report.name}"] = report.passed
            if any(r.blocking_failure for r in reports):
                exit_code = EXIT_SUITE_FAILURE
        _finish(target, f"sweep {key}={_value_label(value)}", exit_code, metrics)
        row["exit_code"] = exit_code
        row["status"] = "ok" if exit_code == EXIT_OK else "failed"
    except LabError as exc:
        logger.error(f"Sweep point {key}={value} failed: {exc.message}")
        row.update({"exit_code": exc.exit_code, "status": "error", "error": exc.message})
    except Exception as exc:
        logger.exception(f"Sweep point {key}={value} raised")
        row.update({"exit_code": 1, "status": "error", "error": f"{type(exc).__name__}: {exc}"})


def run_sweep(
    config: RunConfig,
    run_dir: Path,
    key: str,
    values: list[Any],
    workers: int = 1,
    command: str = "sweep",
) -> int:
    """One run per value in ``{key}={value}`` subdirectories, merged into sweep.csv.

    Returns:
        0 if at least one row succeeded, else the exit code of the first row

    Raises:
        ValidationError: Empty value list or a key absent from the config
    """
    if not values:
        raise ValidationError("sweep needs at least one value")
    if not has_key(config, key):
        raise ConfigError(f"{key}: parameter does not exist in the config")
    run_dir.mkdir(parents=True, exist_ok=True)
    metrics = RunMetrics()
    dump_run_config(config, run_dir / CONFIG_NAME)
    config_data = config.model_dump(mode="json")
    jobs = [(config_data, key, v, str(run_dir / f"{key}={_value_label(v)}")) for v in values]

    if workers <= 1:
        outcomes = [_sweep_job(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_job, *job) for job in jobs]
            outcomes = [future.result() for future in futures]

    rows = []
    for row, duration in outcomes:
        metrics.record("sweep_point", row["status"], duration)
        rows.append(row)
    if key == GRID_SPACING_KEY:
        solved = [r for r in rows if r.get("h") is not None]
        failed = [r for r in rows if r.get("h") is None]
        rows = attach_orders(solved, "h", ["error_inf", "fb_error"]) + failed

    write_table_csv(run_dir / f"{SWEEP_TABLE}.csv", rows)
    write_json(run_dir / f"{SWEEP_TABLE}.json", {"parameter": key, "rows": rows})
    succeeded = sum(row["status"] == "ok" for row in rows)
    logger.info(f"Sweep over {key}: {succeeded}/{len(rows)} point(s) succeeded")
    exit_code = EXIT_OK if succeeded else rows[0]["exit_code"]
    return _finish(run_dir, command, exit_code, metrics)
