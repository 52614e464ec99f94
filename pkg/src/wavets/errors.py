"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: configuration problems
exit 2, data problems exit 3, numerical failures exit 4.
"""


class WaveTSError(Exception):
    """Base class for all package errors."""


class ConfigError(WaveTSError):
    """Invalid configuration or failed validation."""


class DataError(WaveTSError):
    """Malformed or incompatible input data."""


class NumericalError(WaveTSError):
    """Non-finite values or other numerical failure during computation."""
