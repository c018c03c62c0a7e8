"""Experiment suites.

This module discovers and registers every suite class in the experiments/
directory and, if present, experiments_custom/. Suites are classes that
inherit from BaseSuite and may define a 'suite_name' class attribute to
control their registration name.

Suites in experiments_custom/ are discovered after experiments/, so a custom
suite with the same name overrides a built-in.
"""

import importlib
import inspect
import logging
from pathlib import Path

from core.suites import register_suite
from core.suites.base import BaseSuite

logger = logging.getLogger(__name__)


def _register_suites_from_directory(package_name: str, search_dir: Path) -> list[str]:
    """Discover and register suites from a directory.

    Args:
        package_name: Python package name for imports
        search_dir: Directory to scan for .py files

    Returns:
        List of registered suite names
    """
    registered: list[str] = []

    for suite_file in sorted(search_dir.glob("*.py")):
        if suite_file.name.startswith("_"):
            continue

        module_name = suite_file.stem

        try:
            module = importlib.import_module(f"{package_name}.{module_name}")
        except Exception as e:
            logger.error(f"Failed to import {package_name}.{module_name}: {e}", exc_info=True)
            continue

        for name, obj in inspect.getmembers(module, inspect.isclass):
            if (
                issubclass(obj, BaseSuite)
                and obj is not BaseSuite
                and not inspect.isabstract(obj)
                and obj.__module__ == module.__name__
            ):
                suite_name = obj.suite_name or name.lower().removesuffix("suite")
                register_suite(suite_name, obj)
                registered.append(suite_name)
                logger.debug(
                    f"Registered suite '{suite_name}' from {package_name}.{module_name}.{name}"
                )

    return registered


def _discover_and_register_suites() -> None:
    """Discover and register suites from experiments/ and experiments_custom/."""
    base_dir = Path(__file__).parent.parent
    all_registered = _register_suites_from_directory("experiments", base_dir / "experiments")

    custom_dir = base_dir / "experiments_custom"
    if custom_dir.is_dir():
        custom = _register_suites_from_directory("experiments_custom", custom_dir)
        all_registered.extend(custom)
        if custom:
            logger.info(f"Loaded {len(custom)} custom suite(s) from experiments_custom/")

    if all_registered:
        logger.debug(f"Registered {len(all_registered)} suites: {all_registered}")
    else:
        logger.warning("No suites were discovered in experiments/")


# Auto-discover and register suites on import
_discover_and_register_suites()
