"""Core numerics and shared functionality."""

from core.exceptions import (
    ConfigError,
    LabError,
    NonConvergenceError,
    PreconditionError,
    ValidationError,
)

__all__ = [
    "ConfigError",
    "LabError",
    "NonConvergenceError",
    "PreconditionError",
    "ValidationError",
]
