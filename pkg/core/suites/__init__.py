"""Experiment suite registry."""

from core.suites.base import BaseSuite, SuiteContext

__all__ = ["BaseSuite", "SuiteContext", "register_suite", "get_suite", "list_suites"]

# Suite registry
_suite_registry: dict[str, type[BaseSuite]] = {}


def register_suite(name: str, suite_class: type[BaseSuite]):
    """Register a suite class.

    Args:
        name: Suite name
        suite_class: Suite class to register
    """
    _suite_registry[name.lower()] = suite_class


def get_suite(name: str) -> type[BaseSuite] | None:
    """Get a suite class by name, or None if not registered."""
    return _suite_registry.get(name.lower())


def list_suites() -> list[str]:
    """List all registered suite names."""
    return sorted(_suite_registry.keys())
