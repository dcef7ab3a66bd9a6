"""Numerics for the KdV hierarchy through the diagonal Green's function."""

from .errors import (
    AccuracyError,
    ConfigurationError,
    InadmissibleError,
    InconsistencyError,
    IntegrationFailure,
    KdvLabError,
    NumericalError,
    SpectrumIntersection,
    UsageError,
)
from .spectral import CIRCLE, LINE, Profile

__all__ = [
    "AccuracyError",
    "CIRCLE",
    "ConfigurationError",
    "InadmissibleError",
    "InconsistencyError",
    "IntegrationFailure",
    "KdvLabError",
    "LINE",
    "NumericalError",
    "Profile",
    "SpectrumIntersection",
    "UsageError",
]

__version__ = "0.1.0"
