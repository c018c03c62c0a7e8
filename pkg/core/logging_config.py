"""Run-scoped logging.

Every record carries the name of the run directory it belongs to. The CLI sets
it once the directory is known; sweep points override it for their own
records with ``run_scope``.
"""

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from pathlib import Path

DEFAULT_FORMAT = "%(asctime)s %(levelname)-8s [%(run_id)s] %(name)s: %(message)s"
NO_RUN = "-"

_current_run: ContextVar[str] = ContextVar("obstaclelab_run", default=NO_RUN)


class RunFilter(logging.Filter):
    """Stamp ``run_id`` on records from the active run scope."""

    def filter(self, record: logging.LogRecord) -> bool:
        if not hasattr(record, "run_id"):
            record.run_id = _current_run.get()
        return True


def set_run_id(run_id: str | None) -> None:
    """Name the run that subsequent records belong to."""
    _current_run.set(run_id or NO_RUN)


def current_run_id() -> str:
    return _current_run.get()


@contextmanager
def run_scope(run_id: str) -> Iterator[None]:
    """Records emitted inside the block carry ``run_id``."""
    token = _current_run.set(run_id)
    try:
        yield
    finally:
        _current_run.reset(token)


def setup_logging(
    level: str = "INFO",
    log_file: Path | None = None,
    log_format: str | None = None,
    run_id: str | None = None,
) -> None:
    """Send records to stderr (and optionally a file), stamped with the run id.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional path to log file
        log_format: Optional format; may use ``%(run_id)s``
        run_id: Initial run id, usually the run directory name
    """
    set_run_id(run_id)
    formatter = logging.Formatter(log_format or DEFAULT_FORMAT)
    run_filter = RunFilter()

    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    root_logger.handlers.clear()

    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))
    for handler in handlers:
        handler.setFormatter(formatter)
        handler.addFilter(run_filter)
        root_logger.addHandler(handler)

    # scipy's sparse solvers warn through the warnings module, not logging
    logging.captureWarnings(True)
