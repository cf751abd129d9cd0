"""Exception types shared across the package."""


class FppError(Exception):
    """Base class for all package errors."""


class DomainError(FppError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class ConfigurationError(FppError, ValueError):
    """Invalid distribution or experiment parameters."""


class PreconditionError(FppError, RuntimeError):
    """A stated precondition does not hold (e.g. insufficient window margin)."""


class CapacityError(FppError, RuntimeError):
    """The requested window exceeds the configured resource budget."""


class WindowTooSmallError(FppError, RuntimeError):
    """A guaranteed object could not be realised inside the finite window."""
