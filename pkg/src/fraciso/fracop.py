"""Discrete Dirichlet fractional Laplacian on a lattice mesh.

Continuous piecewise-linear (hat) Galerkin discretization of the quadratic
form ``(gamma/2) * int int (u(x)-u(y))^2 / |x-y|^(1+2s)`` with exact zero
extension outside the domain. On the full lattice ``h*Z`` the stiffness
matrix is Toeplitz with entries ``h^(1-2s) * a_k``; a mesh only selects a
principal submatrix of it.

The dimensionless entries have the closed form

    a_k = C(s) * delta^4[ |z|^(3-2s) ](k),   C(s) = 1 / (2 Gamma(4-2s) cos(pi s)),

where ``delta^4`` is the central fourth difference. This follows from the
symbol ``|xi|^(2s) * sinc(xi/2)^4`` of the hat-hat interaction. The
difference cancels catastrophically for large ``k`` and the prefactor is
singular at ``s = 1/2``, so the difference is taken in extended precision on
``z^2 * expm1((1-2s) log z) / (1-2s)``, which differs from ``|z|^(3-2s)`` by a
quadratic that the fourth difference annihilates.
"""
from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import mpmath
import numpy as np
import scipy.linalg as sla

from .domain import GridFunction, Mesh1D
from .errors import ConvergenceError, FinitenessError, MeshMismatchError
from .specfun import FracOrder, gamma_fn, normalization_gamma

DEFAULT_TOL = 1e-10
# below this order the nearest-neighbour weight is positive: as s -> 0 the
# form tends to the consistent P1 mass matrix, whose off-diagonal is +1/6
S_SIGN_CHANGE = 0.2373770661941018

_diff_cache: dict[float, np.ndarray] = {}
_diff_lock = threading.Lock()


def _check_order(s: float) -> float:
    s = float(s)
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order must satisfy 0 < s < 1, got {s}")
    return s


def _prefactor(s: float) -> float:
    # (1-2s) / (2 Gamma(4-2s) cos(pi s)), written through t = 1/2 - s
    t = 0.5 - s
    ratio = 1.0 / math.pi if t == 0.0 else t / math.sin(math.pi * t)
    return 2.0 * ratio / (2.0 * gamma_fn(4.0 - 2.0 * s))


def _fourth_differences(s: float, K: int) -> np.ndarray:
    """delta^4 of the regularized |z|^(3-2s), offsets 0..K, in mpmath."""
    with _diff_lock:
        cached = _diff_cache.get(s)
        if cached is not None and cached.size > K:
            return cached[:K + 1]
    dps = 30 + int(4 * math.log10(K + 10))
    with mpmath.workdps(dps):
        eps = 2 * (mpmath.mpf(1) / 2 - mpmath.mpf(s))
        vals = [mpmath.mpf(0)]
        for z in range(1, K + 3):
            lz = mpmath.log(z)
            g = lz if eps == 0 else mpmath.expm1(eps * lz) / eps
            vals.append(z * z * g)

        def f(k):
            return vals[abs(k)]

        out = np.array([float(f(k - 2) - 4 * f(k - 1) + 6 * f(k) - 4 * f(k + 1) + f(k + 2))
                        for k in range(K + 1)])
    with _diff_lock:
        if s not in _diff_cache or _diff_cache[s].size < out.size:
            _diff_cache[s] = out
    return out


@dataclass(frozen=True)
class KernelWeights:
    """Lattice interaction weights for order ``s`` and spacing ``h``.

    ``table[k]`` is the dimensionless weight for offset ``k`` (normalization
    constant included); the stiffness entry is ``h**(1-2s) * table[k]``.
    There is no truncation: the table covers every offset that the mesh can
    produce. ``tail_coefficient`` is the limit of ``|table[k]| * k**(1+2s)``.
    """

    s: float
    h: float
    table: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.table.size - 1

    @property
    def scale(self) -> float:
        return self.h ** (1.0 - 2.0 * self.s)

    @property
    def scaled(self) -> np.ndarray:
        return self.scale * self.table

    @property
    def m_matrix(self) -> bool:
        """True when every off-diagonal weight is negative."""
        return bool(np.all(self.table[1:] < 0))

    @property
    def tail_coefficient(self) -> float:
        return normalization_gamma(FracOrder(self.s, 1))

    def tail(self, k):
        """Leading-order weight for far offsets: point-mass interaction of two hats."""
        k = np.asarray(k, dtype=float)
        return -self.tail_coefficient * k ** (-1.0 - 2.0 * self.s)


def kernel_weights(s: float, h: float, K: int) -> KernelWeights:
    s = _check_order(s)
    table = _prefactor(s) * _fourth_differences(s, int(K))
    # offset 1 turns positive below S_SIGN_CHANGE (the mass-matrix limit); farther offsets never do
    if not table[0] > 0 or (table.size > 2 and not np.all(table[2:] < 0)):
        raise RuntimeError(f"kernel weights have an unexpected sign at s={s}")
    table.setflags(write=False)
    return KernelWeights(s, float(h), table)


class OperatorHandle:
    """Assembled stiffness form on a mesh, with lumped mass ``h`` per node.

    The matrix is dense; meshes at desk scale stay below a few thousand
    nodes. Factorizations of ``A - alpha*M`` are memoized per shift.
    """

    def __init__(self, mesh: Mesh1D, weights: KernelWeights, matrix: np.ndarray):
        self.mesh = mesh
        self.weights = weights
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.mass = mesh.mass
        self.lambda1_estimate: float | None = None
        self._factors: OrderedDict[float, tuple] = OrderedDict()
        self._max_factors = 8 if mesh.n <= 2048 else 1
        self._lock = threading.Lock()

    @property
    def s(self) -> float:
        return self.weights.s

    @property
    def n(self) -> int:
        return self.mesh.n

    def __repr__(self):
        return f"OperatorHandle(s={self.s}, n={self.n}, h={self.mesh.h:.4g})"

    def _check(self, u: GridFunction) -> np.ndarray:
        if not u.mesh.same_as(self.mesh):
            raise MeshMismatchError("grid function lives on a different mesh")
        return u.values

    def apply(self, u: GridFunction) -> GridFunction:
        return GridFunction(self.mesh, self.matrix @ self._check(u))

    def energy(self, u: GridFunction) -> float:
        """Squared Gagliardo seminorm of the piecewise-linear interpolant."""
        v = self._check(u)
        return float(max(v @ (self.matrix @ v), 0.0))

    def mass_inner(self, u: GridFunction, v: GridFunction) -> float:
        return float(self.mesh.h * (self._check(u) @ self._check(v)))

    def load(self) -> GridFunction:
        """The load vector of the constant 1 (``int phi_i = h``)."""
        return GridFunction(self.mesh, self.mass.copy())

    def shifted_matrix(self, alpha: float) -> np.ndarray:
        return self.matrix - alpha * np.diag(self.mass)

    def factor(self, alpha: float = 0.0):
        """Cholesky factor of ``A - alpha*M``; refuses if it is not positive definite."""
        alpha = float(alpha)
        with self._lock:
            fac = self._factors.get(alpha)
            if fac is not None:
                self._factors.move_to_end(alpha)
                return fac
        try:
            fac = sla.cho_factor(self.shifted_matrix(alpha), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            raise FinitenessError(
                f"A - alpha*M is not positive definite at alpha={alpha}: the shift has "
                "reached the principal eigenvalue, where Q(alpha) is infinite") from None
        with self._lock:
            self._factors[alpha] = fac
            while len(self._factors) > self._max_factors:
                self._factors.popitem(last=False)
        return fac

    def solve_shifted(self, alpha: float, rhs: GridFunction, tol: float = DEFAULT_TOL,
                      method: str = "cholesky") -> GridFunction:
        """Solve ``(A - alpha*M) w = rhs`` to relative residual ``tol``.

        ``method="cg"`` runs Jacobi-preconditioned conjugate gradients instead
        of the direct factorization.
        """
        alpha = float(alpha)
        b = self._check(rhs)
        lam = self.lambda1_estimate
        if lam is not None and alpha >= lam:
            raise FinitenessError(
                f"alpha={alpha} is not below the principal eigenvalue {lam}: "
                "Q(alpha) is finite only for alpha < lambda_1")
        if method == "cholesky":
            w = self._solve_direct(alpha, b, tol)
        elif method == "cg":
            w = conjugate_gradient(lambda v: self.matrix @ v - alpha * self.mass * v, b,
                                   diag=np.diag(self.matrix) - alpha * self.mass,
                                   tol=tol, max_iter=20 * self.n)
        else:
            raise ValueError(f"unknown method {method!r}")
        return GridFunction(self.mesh, w)

    def _solve_direct(self, alpha, b, tol):
        fac = self.factor(alpha)
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return np.zeros_like(b)
        w = sla.cho_solve(fac, b, check_finite=False)
        for _ in range(3):
            r = b - (self.matrix @ w - alpha * self.mass * w)
            if np.linalg.norm(r) <= tol * bnorm:
                return w
            w = w + sla.cho_solve(fac, r, check_finite=False)
        r = b - (self.matrix @ w - alpha * self.mass * w)
        if np.linalg.norm(r) > tol * bnorm:
            raise ConvergenceError(
                f"direct solve stalled at relative residual {np.linalg.norm(r) / bnorm:.3e}")
        return w


def conjugate_gradient(matvec, b, diag=None, tol=DEFAULT_TOL, max_iter=None, x0=None):
    """Preconditioned conjugate gradients for a symmetric positive definite system."""
    b = np.asarray(b, dtype=float)
    n = b.size
    max_iter = 20 * n if max_iter is None else max_iter
    inv_d = np.ones(n) if diag is None else 1.0 / np.asarray(diag, dtype=float)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - matvec(x) if x0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    z = inv_d * r
    p = z.copy()
    rz = r @ z
    trace = []
    for _ in range(max_iter):
        rel = np.linalg.norm(r) / bnorm
        trace.append(rel)
        if rel <= tol:
            return x
        Ap = matvec(p)
        pAp = p @ Ap
        if pAp <= 0:
            raise FinitenessError("system matrix is not positive definite (CG breakdown)")
        step = rz / pAp
        x += step * p
        r -= step * Ap
        z = inv_d * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(f"CG did not converge in {max_iter} iterations "
                           f"(relative residual {trace[-1]:.3e})", trace)


def assemble_operator(mesh: Mesh1D, s: float) -> OperatorHandle:
    """Stiffness matrix of the restricted fractional Laplacian on ``mesh``."""
    s = _check_order(s)
    idx = mesh.index
    span = int(idx[-1] - idx[0])
    weights = kernel_weights(s, mesh.h, max(span, 1))
    row = weights.scaled
    n = mesh.n
    A = np.empty((n, n))
    block = 1024
    for r0 in range(0, n, block):
        r1 = min(n, r0 + block)
        A[r0:r1] = row[np.abs(idx[r0:r1, None] - idx[None, :])]
    return OperatorHandle(mesh, weights, A)
