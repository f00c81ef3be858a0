"""Exception types shared across the package.

The CLI maps these onto its exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class HdidError(Exception):
    """Base class for package errors."""


class ConfigError(HdidError):
    """Invalid configuration: bad key, out-of-range value, bad flag combo."""


class DataError(HdidError):
    """Malformed or inconsistent input data."""


class InvalidParameterError(ConfigError):
    """A distribution parameter violates its precondition."""


class NumericalError(HdidError):
    """A numerical operation failed (non-PSD matrix, singular system, diverged chain)."""
