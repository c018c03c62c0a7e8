"""Custom exception classes for the laboratory."""

from typing import Any


class LabError(Exception):
    """Base exception for all laboratory errors."""

    def __init__(
        self,
        message: str,
        exit_code: int = 1,
        details: dict[str, Any] | None = None,
        error_code: str | None = None,
    ):
        """Initialize laboratory exception.

        Args:
            message: Human-readable error message
            exit_code: Process exit code the CLI should use
            details: Additional error details
            error_code: Optional error code for programmatic handling
        """
        super().__init__(message)
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        self.error_code = error_code or f"ERR_{exit_code}"


class ValidationError(LabError):
    """Exception for invalid input (exit code 2)."""

    def __init__(
        self,
        message: str,
        details: dict[str, Any] | None = None,
        error_code: str | None = None,
    ):
        """Initialize validation error.

        Args:
            message: Error message
            details: Additional error details
            error_code: Optional error code
        """
        super().__init__(message, 2, details, error_code or "ERR_VALIDATION")


class ConfigError(ValidationError):
    """Run configuration failed schema validation."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message, details, error_code="ERR_CONFIG")


class EllipticityError(ValidationError):
    """Coefficient parameters break uniform ellipticity or positivity of f."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            f"ellipticity violated: {message}", details, error_code="ERR_ELLIPTICITY"
        )


class PreconditionError(ValidationError):
    """A numerical operation was called outside its admissible range."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message, details, error_code="ERR_PRECONDITION")


class UnsupportedCoefficientsError(ValidationError):
    """Coefficients the discretization cannot represent."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message, details, error_code="ERR_UNSUPPORTED")


class NonConvergenceError(LabError):
    """Iteration budget exhausted before the complementarity test passed."""

    def __init__(
        self,
        message: str,
        result: Any = None,
        details: dict[str, Any] | None = None,
    ):
        """Initialize nonconvergence error.

        Args:
            message: Error message
            result: The unconverged SolveResult
            details: Additional error details (residual, iterations)
        """
        super().__init__(message, 3, details, error_code="ERR_NONCONVERGENCE")
        self.result = result


class DegenerateFitError(LabError):
    """Not enough data to fit a plane or a blowup profile."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message, 1, details, error_code="ERR_DEGENERATE_FIT")


class EmptyPointSetError(LabError):
    """Hausdorff distance requested with an empty operand."""

    def __init__(
        self,
        message: str = "Hausdorff distance is undefined for an empty set",
        details: dict[str, Any] | None = None,
    ):
        super().__init__(message, 1, details, error_code="ERR_EMPTY_SET")
