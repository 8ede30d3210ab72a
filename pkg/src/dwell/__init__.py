"""Simulation toolkit for quantum release dynamics in a wide double-well potential."""

__version__ = "0.1.0"

from .errors import (
    DomainError,
    DwellError,
    ResourceGuardError,
    SchemaError,
    ToleranceError,
)
from .params import (
    ExperimentConfig,
    NoiseSpectra,
    DerivedScales,
    derive_scales,
    get_preset,
    PRESETS,
)

__all__ = [
    "DomainError",
    "DwellError",
    "ResourceGuardError",
    "SchemaError",
    "ToleranceError",
    "ExperimentConfig",
    "NoiseSpectra",
    "DerivedScales",
    "derive_scales",
    "get_preset",
    "PRESETS",
    "__version__",
]
