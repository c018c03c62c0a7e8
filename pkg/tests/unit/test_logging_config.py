"""Unit tests for run-scoped logging."""

import logging

import pytest

from core.logging_config import NO_RUN, RunFilter, current_run_id, run_scope, set_run_id, setup_logging

pytestmark = pytest.mark.unit


def _record() -> logging.LogRecord:
    return logging.LogRecord("core.solver", logging.INFO, __file__, 1, "converged", None, None)


def test_records_default_to_no_run():
    record = _record()
    assert RunFilter().filter(record)
    assert record.run_id == NO_RUN


def test_scope_overrides_and_restores():
    set_run_id("radial_2d")
    with run_scope("grid.h=0.0625"):
        record = _record()
        RunFilter().filter(record)
        assert current_run_id() == "grid.h=0.0625"
    assert record.run_id == "grid.h=0.0625"
    assert current_run_id() == "radial_2d"


def test_explicit_run_id_is_kept():
    record = _record()
    record.run_id = "elsewhere"
    with run_scope("radial_2d"):
        RunFilter().filter(record)
    assert record.run_id == "elsewhere"


def test_file_handler_stamps_run(tmp_path):
    log_file = tmp_path / "logs" / "lab.log"
    setup_logging("DEBUG", log_file=log_file, log_format="%(run_id)s|%(levelname)s|%(message)s", run_id="half_line")
    logging.getLogger("core.solver").debug("iteration 3")
    with run_scope("grid.h=0.03125"):
        logging.getLogger("core.pipeline").warning("skipped radius")
    lines = log_file.read_text().splitlines()
    assert lines == ["half_line|DEBUG|iteration 3", "grid.h=0.03125|WARNING|skipped radius"]
    assert logging.getLogger().level == logging.DEBUG
