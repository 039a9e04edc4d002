"""Spectral simulator and diagnostics toolkit for the rotational NLS."""

__version__ = "0.1.0"

from .grid import GridSpec, WaveField, gaussian_field, make_grid
from .operators import (
    ConstantPower,
    GeneralG,
    InhomogeneousPower,
    OperatorSet,
    PhysicsParams,
)

__all__ = [
    "GridSpec",
    "WaveField",
    "make_grid",
    "gaussian_field",
    "PhysicsParams",
    "OperatorSet",
    "ConstantPower",
    "InhomogeneousPower",
    "GeneralG",
    "__version__",
]
