"""Simulation and verification toolkit for cylindrical Levy processes in finite dimension."""
from .errors import CylLevyError, DimensionMismatch, StatisticalFailure, UnsupportedOperation
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CylLevyError",
    "DimensionMismatch",
    "StatisticalFailure",
    "UnsupportedOperation",
    "__version__",
]
