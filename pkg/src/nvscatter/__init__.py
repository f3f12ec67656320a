"""Inverse scattering for the zero-energy Novikov-Veselov equation.

Typical use::

    from nvscatter import RunConfig, run_pipeline
    manifest = run_pipeline(RunConfig(), "out")
"""

from .config import RunConfig, load_config, parse_config
from .errors import (
    ClassificationConflict,
    ConfigurationError,
    InstabilityError,
    NumericalError,
    NVError,
    PotentialSpecError,
    SupercriticalRefusal,
    SymmetryViolation,
)
from .evolve import evolve
from .field import Field, Grid2D, make_grid
from .potentials import PotentialSpec, classify, classify_by_form, make_potential
from .reconstruct import reconstruct_q
from .scatter import KGrid, ScatteringData, make_kgrid, scattering_transform
from .pipeline import run_pipeline

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "load_config",
    "parse_config",
    "ClassificationConflict",
    "ConfigurationError",
    "InstabilityError",
    "NumericalError",
    "NVError",
    "PotentialSpecError",
    "SupercriticalRefusal",
    "SymmetryViolation",
    "evolve",
    "Field",
    "Grid2D",
    "make_grid",
    "PotentialSpec",
    "classify",
    "classify_by_form",
    "make_potential",
    "reconstruct_q",
    "KGrid",
    "ScatteringData",
    "make_kgrid",
    "scattering_transform",
    "run_pipeline",
]
