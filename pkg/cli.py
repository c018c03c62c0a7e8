"""CLI commands for obstaclelab runs."""

import shutil
import sys
from pathlib import Path
from typing import NoReturn

import click

from __version__ import __version__
from core.exceptions import LabError


def _fail(exc: LabError) -> NoReturn:
    click.secho(f"❌ {exc.message}", fg="red", err=True)
    sys.exit(exc.exit_code)


def _setup(log_level: str | None) -> None:
    """Initialize settings and logging; ``--log-level`` overrides settings."""
    from config.settings import initialize_settings
    from core.logging_config import setup_logging

    settings = initialize_settings()
    setup_logging(
        level=log_level or settings.log_level,
        log_file=settings.log_file,
        log_format=settings.log_format,
    )


def _load(config_path: str, seed: int | None):
    """Load a run config and fill in the seed from the option or settings."""
    from config.run_config import load_run_config
    from config.settings import get_settings

    config = load_run_config(Path(config_path))
    if seed is not None:
        config = config.model_copy(update={"seed": seed})
    elif config.seed is None:
        config = config.model_copy(update={"seed": get_settings().default_seed})
    return config


def _run_dir(config_path: str, config, out: str | None) -> Path:
    from config.settings import get_settings

    if out:
        return Path(out)
    if config.output_dir:
        return Path(config.output_dir)
    return get_settings().output_root / Path(config_path).stem


def _name_run(run_dir: Path) -> None:
    from core.logging_config import set_run_id

    set_run_id(run_dir.name)


def _workers(workers: int | None) -> int:
    from config.settings import get_settings

    return workers if workers is not None else get_settings().default_workers


def _report_exit(exit_code: int, run_dir: Path) -> None:
    messages = {
        0: ("✅ Run complete", "green"),
        3: ("❌ Solver did not converge (summary written)", "red"),
        4: ("❌ Asserted suite(s) failed (see reports/)", "red"),
    }
    text, color = messages.get(exit_code, (f"❌ Run failed with exit code {exit_code}", "red"))
    click.secho(text, fg=color)
    click.echo(f"📦 Artifacts: {run_dir}")
    sys.exit(exit_code)


config_argument = click.argument("config_path", metavar="CONFIG", type=click.Path(dir_okay=False))
out_option = click.option("--out", "-o", default=None, help="Run directory (overrides the config)")
seed_option = click.option("--seed", type=int, default=None, help="Random seed (overrides the config)")
workers_option = click.option("--workers", "-w", type=click.IntRange(min=1), default=None, help="Worker pool size")
log_level_option = click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False),
    default=None,
    help="Log level (overrides settings)",
)


@click.group()
@click.version_option(version=__version__, prog_name="obstaclelab")
def cli():
    """obstaclelab - numerical laboratory for obstacle problems."""
    pass


_CUSTOM_SUITES_INIT = '''"""Custom experiment suites (gitignored).

Add suite modules here. Classes inheriting from core.suites.base.BaseSuite are
registered by their suite_name and can be listed in a run config's suites block.
A custom suite with the name of a built-in one replaces it.
'''


@cli.command()
@click.option("--force", "-f", is_flag=True, help="Overwrite existing config files")
@click.option(
    "--custom-dir/--no-custom-dir",
    default=True,
    help="Create experiments_custom/ for update-safe custom suites",
    show_default=True,
)
def init(force: bool, custom_dir: bool):
    """Initialize settings and a starter run config from templates."""
    click.echo("🧪 Initializing obstaclelab configuration...")

    config_files = [
        ("config/settings_template.json", "config/settings.json"),
        ("config/run_template.json", "config/run.json"),
    ]

    success_count = 0
    skip_count = 0
    error_count = 0

    for template_path, target_path in config_files:
        template = Path(template_path)
        target = Path(target_path)

        if not template.exists():
            click.secho(f"❌ Template not found: {template_path}", fg="red")
            error_count += 1
            continue

        if target.exists() and not force:
            click.secho(f"⏭️  Skipping {target_path} (already exists)", fg="yellow")
            skip_count += 1
            continue

        try:
            shutil.copy2(template, target)
            click.secho(f"✅ Created {target_path}", fg="green")
            success_count += 1
        except OSError as e:
            click.secho(f"❌ Failed to create {target_path}: {e}", fg="red")
            error_count += 1

    if custom_dir:
        init_file = Path("experiments_custom") / "__init__.py"
        if not init_file.exists():
            try:
                init_file.parent.mkdir(parents=True, exist_ok=True)
                init_file.write_text(_CUSTOM_SUITES_INIT.strip() + "\n", encoding="utf-8")
                click.secho("✅ Created experiments_custom/ (for custom suites, gitignored)", fg="green")
                success_count += 1
            except OSError as e:
                click.secho(f"❌ Failed to create experiments_custom/: {e}", fg="red")
                error_count += 1

    click.echo()
    if success_count > 0:
        click.secho(f"✅ Successfully created {success_count} file(s)", fg="green")
    if skip_count > 0:
        click.secho(f"⏭️  Skipped {skip_count} existing file(s)", fg="yellow")
        click.echo("   Use --force to overwrite existing config files")
    if error_count > 0:
        click.secho(f"❌ {error_count} error(s) occurred", fg="red")
        sys.exit(1)

    if success_count > 0:
        click.echo()
        click.echo("📝 Next steps:")
        click.echo("   1. Edit config/run.json (grid, coefficients, suites)")
        click.echo("   2. Run: uv run obstaclelab validate-config config/run.json")
        click.echo("   3. Run: uv run obstaclelab verify config/run.json")


@cli.command()
@config_argument
@log_level_option
def validate_config(config_path: str, log_level: str | None):
    """Check a run config against the schema and module preconditions.

    Builds the grid, certifies the coefficients and reads the boundary data
    without solving.
    """
    from core.pipeline import validate_problem

    _setup(log_level)
    click.echo(f"🔍 Validating {config_path}...")
    try:
        config = _load(config_path, None)
        summary = validate_problem(config)
    except LabError as exc:
        _fail(exc)

    for key, value in summary.items():
        click.echo(f"   {key}: {value}")
    click.secho("✅ Configuration is valid", fg="green")


@cli.command()
@config_argument
@out_option
@seed_option
@log_level_option
def solve(config_path: str, out: str | None, seed: int | None, log_level: str | None):
    """Solve the obstacle problem of a config and write the solution artifacts."""
    from core.pipeline import run_solve

    _setup(log_level)
    try:
        config = _load(config_path, seed)
        run_dir = _run_dir(config_path, config, out)
        _name_run(run_dir)
        click.echo(f"🔧 Solving {config_path} into {run_dir}/")
        exit_code = run_solve(config, run_dir, command=f"solve {config_path}")
    except LabError as exc:
        _fail(exc)
    _report_exit(exit_code, run_dir)


@cli.command()
@config_argument
@out_option
@seed_option
@workers_option
@log_level_option
def verify(config_path: str, out: str | None, seed: int | None, workers: int | None, log_level: str | None):
    """Solve, run every configured suite and write reports.

    Exit 0 if all asserted suites pass, 4 if one fails. Negative controls
    never affect the exit status.
    """
    from core.pipeline import run_verify

    _setup(log_level)
    try:
        config = _load(config_path, seed)
        run_dir = _run_dir(config_path, config, out)
        _name_run(run_dir)
        click.echo(f"🔬 Verifying {config_path} into {run_dir}/")
        exit_code = run_verify(config, run_dir, _workers(workers), command=f"verify {config_path}")
    except LabError as exc:
        _fail(exc)
    _report_exit(exit_code, run_dir)


@cli.command()
@config_argument
@click.option("--param", "-p", required=True, help="Dotted config key to sweep, e.g. grid.h")
@click.option("--values", "-v", "values_text", required=True, help="Comma-separated values, e.g. 1/64,1/128")
@out_option
@seed_option
@workers_option
@log_level_option
def sweep(
    config_path: str,
    param: str,
    values_text: str,
    out: str | None,
    seed: int | None,
    workers: int | None,
    log_level: str | None,
):
    """Run one config per value of a parameter and merge the rows into sweep.csv."""
    from config.run_config import parse_values
    from core.pipeline import run_sweep

    _setup(log_level)
    try:
        config = _load(config_path, seed)
        run_dir = _run_dir(config_path, config, out)
        _name_run(run_dir)
        values = parse_values(values_text)
        click.echo(f"🔁 Sweeping {param} over {len(values)} value(s) into {run_dir}/")
        exit_code = run_sweep(
            config, run_dir, param, values, _workers(workers), command=f"sweep {config_path} {param}"
        )
    except LabError as exc:
        _fail(exc)
    _report_exit(exit_code, run_dir)


@cli.command()
@click.argument("directory", default=".", type=click.Path(file_okay=False))
@click.option("--runs", is_flag=True, help="Also remove run directories (those holding manifest.json)")
@click.option("--dry-run", is_flag=True, help="List what would be removed")
def clean(directory: str, runs: bool, dry_run: bool):
    """Clean up caches and, with --runs, run outputs under DIRECTORY."""
    from core.artifacts import MANIFEST_NAME

    patterns = [
        "__pycache__",
        "*.pyc",
        "*.pyo",
        ".pytest_cache",
        ".ruff_cache",
        "htmlcov",
        ".coverage",
        "site",
        "*.egg-info",
    ]
    root = Path(directory)
    targets: list[Path] = []
    for pattern in patterns:
        targets.extend(root.rglob(pattern))
    if runs:
        targets.extend(p.parent for p in root.rglob(MANIFEST_NAME))

    click.echo(f"🧹 Cleaning up {root}/...")
    # Parents first so nested run directories are removed once
    for path in sorted(set(targets), key=lambda p: len(p.parts)):
        if not path.exists():
            continue
        if not dry_run:
            if path.is_dir():
                shutil.rmtree(path)
            else:
                path.unlink()
        click.echo(f"   {'Would remove' if dry_run else 'Removed'}: {path}")

    click.secho("✅ Cleanup complete", fg="green")


if __name__ == "__main__":
    cli()
