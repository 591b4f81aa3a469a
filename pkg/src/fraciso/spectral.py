"""Principal Dirichlet eigenpair of the discrete operator."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .domain import Domain1D, GridFunction, build_mesh
from .errors import ConvergenceError
from .fracop import OperatorHandle, assemble_operator


@dataclass
class SpectralResult:
    lambda1h: float
    eigenfunction: GridFunction
    iterations: int
    residual: float
    h: float
    trace: list = field(default_factory=list, repr=False)


def rayleigh_quotient(op: OperatorHandle, u: GridFunction) -> float:
    return op.energy(u) / op.mass_inner(u, u)


def _orient(u: np.ndarray, h: float) -> np.ndarray:
    u = u / math.sqrt(h * (u @ u))
    return -u if u.sum() < 0 else u


def _inverse_iteration(op, start, project=None, tol=1e-10, max_iter=5000):
    A, h = op.matrix, op.mesh.h
    fac = op.factor(0.0)
    u = _orient(start, h)
    rq_old = math.inf
    trace = []
    for it in range(1, max_iter + 1):
        u = sla.cho_solve(fac, h * u, check_finite=False)
        if project is not None:
            u = project(u)
        u = _orient(u, h)
        Au = A @ u
        rq = u @ Au  # u is M-normalized
        res = np.linalg.norm(Au - rq * h * u) / math.sqrt(h)
        trace.append(rq)
        # the residual is in the mass-dual norm; ||u||_M = 1
        if abs(rq - rq_old) <= tol * rq and res <= 1e-9 * rq:
            return rq, u, it, res, trace
        rq_old = rq
    raise ConvergenceError(f"inverse iteration did not converge in {max_iter} steps "
                           f"(last Rayleigh quotient {trace[-1]:.12g})", trace)


def principal_eigenpair(op: OperatorHandle, tol: float = 1e-10,
                        max_iter: int = 5000) -> SpectralResult:
    """Smallest eigenvalue of ``A u = lambda M u`` by inverse power iteration.

    Each step is a solve with the Cholesky factor of ``A``. The iteration stops
    once the Rayleigh quotient changes by at most ``tol`` (relative) and the
    eigen-residual is below ``1e-9 * lambda``. The eigenfunction is
    normalized in the lumped L2 norm and oriented to have positive mean.
    """
    lam, u, it, res, trace = _inverse_iteration(op, np.ones(op.n), tol=tol, max_iter=max_iter)
    op.lambda1_estimate = lam
    return SpectralResult(lam, GridFunction(op.mesh, u), it, res, op.mesh.h, trace)


def second_eigenvalue(op: OperatorHandle, first: SpectralResult, tol: float = 1e-10,
                      max_iter: int = 20000) -> float:
    """Next eigenvalue by inverse iteration deflated against the first eigenvector."""
    h = op.mesh.h
    u1 = first.eigenfunction.values

    def project(v):
        return v - (h * (u1 @ v)) * u1

    rng = np.random.default_rng(0)
    start = project(rng.standard_normal(op.n))
    lam2, *_ = _inverse_iteration(op, start, project=project, tol=tol, max_iter=max_iter)
    return lam2


@dataclass
class Extrapolation:
    value: float
    order: float
    error_bar: float
    monotone: bool
    M_list: list
    values: list


def richardson(M_list, values) -> Extrapolation:
    """Richardson extrapolation from the last three refinement levels.

    The convergence order is estimated from the ratio of the last two
    increments, so the levels should be a geometric sequence.
    """
    M_list = [int(m) for m in M_list]
    values = [float(v) for v in values]
    if len(values) < 3:
        raise ValueError("need at least three refinement levels")
    if any(b <= a for a, b in zip(M_list, M_list[1:])):
        raise ValueError("mesh sizes must increase")
    d = np.diff(values)
    monotone = bool(np.all(d < 0) or np.all(d > 0))
    v0, v1, v2 = values[-3:]
    r = M_list[-1] / M_list[-2]
    d1, d2 = v1 - v0, v2 - v1
    if monotone and d1 != 0 and d2 != 0 and d2 / d1 > 0 and abs(d2) < abs(d1):
        order = math.log(d1 / d2) / math.log(r)
        value = v2 + d2 / (r ** order - 1)
    else:
        order = float("nan")
        value = v2
    if not monotone:
        warnings.warn("refinement sequence is not monotone; order estimate unreliable",
                      RuntimeWarning, stacklevel=2)
    return Extrapolation(value, order, abs(d2), monotone, M_list, values)


def refine_and_extrapolate(domain: Domain1D, s: float, M_list) -> Extrapolation:
    """Mesh-limit estimate of the principal eigenvalue."""
    M_list = list(M_list)
    if len(M_list) < 3:
        raise ValueError("need at least three mesh sizes")
    vals = [principal_eigenpair(assemble_operator(build_mesh(domain, M), s)).lambda1h
            for M in M_list]
    return richardson(M_list, vals)
