"""Exception types shared across the package."""


class VolformError(Exception):
    """Base class for all package errors."""


class InputError(VolformError, ValueError):
    """Malformed or dimensionally inconsistent input."""


class DomainError(VolformError, ValueError):
    """Input outside the mathematical domain of an operation."""


class OracleError(VolformError, RuntimeError):
    """Two independent evaluation routes disagreed."""
