"""Two-photon cooperative emission from atomic ensembles.

Closed-form probabilities, spectra and powers for one atom, two atoms,
small ensembles and a uniform sphere, plus a discrete-mode Schrödinger
integrator that checks them.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .core import (
    Continuum,
    PhysicalParams,
    SingleAtom,
    SmallSystem,
    SpectralGrid,
    TimeSeries,
    TwoAtom,
    TwoExcitationState,
    validate_params,
)
from .errors import CascadeError, ConfigError, IoError, NumericalError

__all__ = [
    "__version__",
    "CascadeError",
    "ConfigError",
    "Continuum",
    "IoError",
    "NumericalError",
    "PhysicalParams",
    "SingleAtom",
    "SmallSystem",
    "SpectralGrid",
    "TimeSeries",
    "TwoAtom",
    "TwoExcitationState",
    "validate_params",
]
