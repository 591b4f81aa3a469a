"""Fractional Dirichlet eigenvalues, torsion and isoperimetric checks in one dimension."""
from .domain import Domain1D, GridFunction, Mesh1D, build_mesh, make_domain, parse_domain, schwarz_ball
from .errors import (BracketError, ConvergenceError, FinitenessError, MeshMismatchError,
                     UnderResolvedError)
from .fracop import OperatorHandle, assemble_operator, kernel_weights
from .specfun import FracOrder
from .spectral import principal_eigenpair, refine_and_extrapolate
from .torsion import find_radius, generalized_torsion, torsion, unit_ball_cache

__all__ = [
    "BracketError", "ConvergenceError", "Domain1D", "FinitenessError", "FracOrder",
    "GridFunction", "Mesh1D", "MeshMismatchError", "OperatorHandle", "UnderResolvedError",
    "assemble_operator", "build_mesh", "find_radius", "generalized_torsion", "kernel_weights",
    "make_domain", "parse_domain", "principal_eigenpair", "refine_and_extrapolate",
    "schwarz_ball", "torsion", "unit_ball_cache",
]
