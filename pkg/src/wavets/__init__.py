"""Wavelet derivative transform and multi-branch linear forecaster."""

from .errors import ConfigError, DataError, NumericalError, WaveTSError

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "NumericalError",
    "WaveTSError",
    "__version__",
]
