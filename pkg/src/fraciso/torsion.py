"""Torsion and generalized torsion: w solving (-Delta)^s w = alpha*w + 1.

Q(alpha, Omega) is the integral of w. On the unit ball the whole family in
alpha is available at once from the eigendecomposition of the operator, and
the dilation law ``Q#(alpha, R) = R^(1+2s) Q#(alpha R^2s, 1)`` moves it to
any radius. The discrete problem obeys that law exactly because a dilated
mesh only rescales the matrix and the mass.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .domain import Domain1D, GridFunction, Mesh1D, build_mesh, scale_mesh
from .errors import BracketError, FinitenessError
from .fracop import DEFAULT_TOL, OperatorHandle, assemble_operator
from .spectral import SpectralResult, principal_eigenpair

UNIT_BALL = Domain1D(((-1.0, 1.0),))


@dataclass
class TorsionResult:
    alpha: float
    w: GridFunction
    Q: float
    energy: float
    l2sq: float

    @property
    def functional(self) -> float:
        """-[w]^2 + alpha*||w||^2 + 2*int w, the maximized value."""
        return -self.energy + self.alpha * self.l2sq + 2.0 * self.Q


def _lambda1(op: OperatorHandle) -> float:
    if op.lambda1_estimate is None:
        principal_eigenpair(op)
    return op.lambda1_estimate


def generalized_torsion(op: OperatorHandle, alpha: float, tol: float = DEFAULT_TOL,
                        method: str = "cholesky") -> TorsionResult:
    """Solve ``(A - alpha M) w = M 1``; refuses unless alpha < lambda_1h."""
    alpha = float(alpha)
    lam = _lambda1(op)
    if alpha >= lam:
        raise FinitenessError(f"alpha={alpha:.6g} >= lambda_1h={lam:.6g}: "
                              "Q(alpha, Omega) is finite only below the principal eigenvalue")
    w = op.solve_shifted(alpha, op.load(), tol=tol, method=method)
    h = op.mesh.h
    return TorsionResult(alpha, w, float(h * w.values.sum()), op.energy(w),
                         float(h * (w.values @ w.values)))


def torsion(op: OperatorHandle, tol: float = DEFAULT_TOL) -> TorsionResult:
    return generalized_torsion(op, 0.0, tol=tol)


def q_derivative_check(op: OperatorHandle, alpha: float, delta: float) -> tuple[float, float]:
    """Central difference of Q in alpha next to the exact derivative ``||w||^2``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    up = generalized_torsion(op, alpha + delta)
    down = generalized_torsion(op, alpha - delta)
    mid = generalized_torsion(op, alpha)
    return (up.Q - down.Q) / (2 * delta), mid.l2sq


@dataclass
class UnitBallQCache:
    """Generalized torsion of the unit interval for every shift at once.

    With ``A = V diag(mu) V^T`` and lumped mass ``h``, the torsion function is
    ``w(beta) = V (mu - beta h)^-1 V^T (h 1)`` and

        Q#(beta, 1) = sum_i rho_i / (lambda_i - beta),  lambda_i = mu_i / h,

    with ``rho_i = h (v_i . 1)^2``. ``table`` holds 64 sample shifts for export.
    """

    s: float
    M: int
    op: OperatorHandle = field(repr=False)
    eig: SpectralResult = field(repr=False)
    lambdas: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)
    table: np.ndarray = field(repr=False)

    @property
    def lambda1h(self) -> float:
        return float(self.lambdas[0])

    @property
    def mesh(self) -> Mesh1D:
        return self.op.mesh

    @property
    def eigenfunction(self) -> GridFunction:
        return self.eig.eigenfunction

    def _check(self, beta):
        beta = np.asarray(beta, dtype=float)
        if np.any(beta >= self.lambda1h):
            raise FinitenessError(f"shift reaches lambda_1h(B_1)={self.lambda1h:.6g}; "
                                  "Q# is finite only for alpha R^2s < lambda_1(B_1)")
        return beta

    def q(self, beta):
        beta = self._check(beta)
        out = np.sum(self.rho / (self.lambdas - beta[..., None]), axis=-1)
        return float(out) if out.ndim == 0 else out

    def l2sq(self, beta):
        beta = self._check(beta)
        out = np.sum(self.rho / (self.lambdas - beta[..., None]) ** 2, axis=-1)
        return float(out) if out.ndim == 0 else out

    def torsion_function(self, beta: float) -> GridFunction:
        beta = float(self._check(beta))
        h = self.mesh.h
        coef = (self.vectors.T @ np.full(self.mesh.n, h)) / (h * (self.lambdas - beta))
        return GridFunction(self.mesh, self.vectors @ coef)


def beta_grid(lambda1: float, n: int = 64, beta_min: float = -64.0) -> np.ndarray:
    """Linear spacing over negative shifts, geometric approach to ``lambda1``."""
    neg = np.linspace(beta_min, 0.0, n // 2, endpoint=False)
    gaps = lambda1 * np.logspace(0.0, -6.0, n - n // 2)
    return np.concatenate([neg, lambda1 - gaps])


def build_unit_ball_cache(s: float, M: int) -> UnitBallQCache:
    op = assemble_operator(build_mesh(UNIT_BALL, M), s)
    eig = principal_eigenpair(op)
    h = op.mesh.h
    mu, V = sla.eigh(op.matrix, check_finite=False)
    rho = h * (V.sum(axis=0)) ** 2
    cache = UnitBallQCache(float(s), int(M), op, eig, mu / h, V, rho, np.empty((0, 3)))
    betas = beta_grid(cache.lambda1h)
    cache.table = np.column_stack([betas, cache.q(betas), cache.l2sq(betas)])
    return cache


_caches: dict[tuple[float, int], UnitBallQCache] = {}
_cache_lock = threading.Lock()


def unit_ball_cache(s: float, M: int) -> UnitBallQCache:
    """Shared, lazily built cache per (s, M); built under a single-writer lock."""
    key = (float(s), int(M))
    with _cache_lock:
        cache = _caches.get(key)
        if cache is None:
            cache = build_unit_ball_cache(*key)
            _caches[key] = cache
    return cache


def finiteness_radius(cache: UnitBallQCache, alpha: float) -> float:
    """Largest radius for which Q#(alpha, R) is finite (inf for alpha <= 0)."""
    if alpha <= 0:
        return float("inf")
    return (cache.lambda1h / alpha) ** (1.0 / (2 * cache.s))


def qsharp(cache: UnitBallQCache, alpha: float, R: float) -> float:
    if not R > 0:
        raise ValueError("radius must be positive")
    s = cache.s
    beta = alpha * R ** (2 * s)
    if beta >= cache.lambda1h:
        raise FinitenessError(f"(alpha, R)=({alpha:.6g}, {R:.6g}) is outside the finiteness "
                              f"region R < {finiteness_radius(cache, alpha):.6g}")
    return R ** (1 + 2 * s) * cache.q(beta)


def ball_torsion_function(cache: UnitBallQCache, alpha: float, R: float) -> GridFunction:
    """Generalized torsion function of B_R on the dilated unit-ball mesh."""
    s = cache.s
    w = cache.torsion_function(alpha * R ** (2 * s))
    return GridFunction(scale_mesh(cache.mesh, R), R ** (2 * s) * w.values)


def find_radius(cache: UnitBallQCache, alpha: float, Q_target: float,
                R_hint_upper: float, rtol: float = 1e-8, max_steps: int = 200) -> float:
    """Radius R with Q#(alpha, R) = Q_target, by bisection on the increasing map."""
    if not Q_target > 0:
        raise ValueError("target must be positive")
    hi = 1.5 * R_hint_upper
    capped = False
    R_inf = finiteness_radius(cache, alpha)
    if hi >= R_inf:
        hi, capped = R_inf * (1 - 1e-12), True
    if qsharp(cache, alpha, hi) < Q_target:
        where = "the finiteness bound" if capped else f"1.5 * R_hint = {hi:.6g}"
        raise BracketError(f"Q_target={Q_target:.6g} is not reached below {where} "
                           f"(alpha={alpha:.6g})")
    lo = 0.0
    R = hi
    for _ in range(max_steps):
        R = 0.5 * (lo + hi)
        q = qsharp(cache, alpha, R)
        if abs(q - Q_target) <= rtol * Q_target:
            return R
        if q < Q_target:
            lo = R
        else:
            hi = R
        if hi - lo <= 4e-16 * hi:
            break
    q = qsharp(cache, alpha, R)
    if abs(q - Q_target) > rtol * Q_target:
        raise BracketError(f"bisection stalled at R={R:.16g} with relative error "
                           f"{abs(q - Q_target) / Q_target:.3e}")
    return R


def q_family(op: OperatorHandle, alphas) -> list[TorsionResult]:
    return [generalized_torsion(op, a) for a in alphas]


def torsion_of_domain(domain: Domain1D, s: float, M: int, alpha: float = 0.0) -> TorsionResult:
    return generalized_torsion(assemble_operator(build_mesh(domain, M), s), alpha)
