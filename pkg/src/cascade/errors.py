"""Exception hierarchy.

Configuration problems derive from ``ConfigError`` and numerical failures
from ``NumericalError``; the CLI maps these onto distinct exit codes.
"""

from __future__ import annotations


class CascadeError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(CascadeError, ValueError):
    """Invalid parameters, geometry or run configuration."""


class NumericalError(CascadeError, ArithmeticError):
    """A computation could not deliver a trustworthy result."""


class NonPositiveFrequency(ConfigError):
    pass


class CouplingTooStrong(ConfigError):
    pass


class BadGeometry(ConfigError):
    pass


class AsymmetricInitialCoeffs(ConfigError):
    pass


class RegimeMismatch(ConfigError):
    pass


class UnnormalizedInitialState(ConfigError):
    pass


class CutoffBelowResonance(ConfigError):
    pass


class GridTooCoarse(ConfigError):
    pass


class WindowTooNarrow(ConfigError):
    pass


class UnknownFlag(ConfigError):
    pass


class ConflictingRegime(ConfigError):
    pass


class UnreadableFile(ConfigError):
    pass


class StepTooLarge(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class OutOfMemoryGuard(NumericalError, MemoryError):
    pass


class IoError(CascadeError, OSError):
    """Output files could not be written."""
