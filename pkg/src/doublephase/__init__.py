"""Numerical toolkit for double phase N-functions: norms, weights, maximal operators, Poincare checks and a minimiser."""
from .fields import luxemburg_norm, modular
from .grid import Domain, Grid, GridField, ball
from .nfunc import BRUTE_FORCE, CLOSED_FORM, NFunction
from .solver import SolveConfig, minimize

__version__ = "0.1.0"

__all__ = [
    "BRUTE_FORCE",
    "CLOSED_FORM",
    "Domain",
    "Grid",
    "GridField",
    "NFunction",
    "SolveConfig",
    "ball",
    "luxemburg_norm",
    "minimize",
    "modular",
]
