"""Rearrangements of grid functions, treated as step functions on cells.

Every node carries a cell of measure ``h``; all arithmetic here is exact
sorting of (value, measure) pairs. The PDE modules read the same nodal
values as piecewise-linear functions; the only place the two views meet is
:func:`polya_szego_gap`, which reports its slack explicitly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .domain import GridFunction, Mesh1D
from .errors import MeshMismatchError
from .fracop import OperatorHandle, kernel_weights

_ROUNDOFF = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class ConcentrationCurve:
    """sigma -> int_0^sigma f*, piecewise linear between breakpoints."""

    sigma: np.ndarray
    cum: np.ndarray

    def __call__(self, sigma):
        return np.interp(sigma, self.sigma, self.cum, right=self.cum[-1])

    @property
    def total(self) -> float:
        return float(self.cum[-1])


@dataclass(frozen=True)
class RearrangementProfile:
    """Decreasing rearrangement f* as (value, measure) steps.

    ``values`` are strictly decreasing and nonnegative; step ``j`` occupies
    ``[S_{j-1}, S_j)`` with ``S`` the cumulative measures.
    """

    values: np.ndarray
    measures: np.ndarray

    @property
    def total_measure(self) -> float:
        return float(self.measures.sum())

    @property
    def breaks(self) -> np.ndarray:
        return np.cumsum(self.measures)

    def decreasing(self, sigma):
        """f*(sigma); zero beyond the total measure."""
        j = np.searchsorted(self.breaks, np.asarray(sigma, dtype=float), side="right")
        return np.append(self.values, 0.0)[j]

    def increasing(self, sigma):
        """f_*(sigma) = f*(|Omega| - sigma)."""
        return self.decreasing(self.total_measure - np.asarray(sigma, dtype=float))

    def distribution(self, t):
        """mu_f(t): measure of the set where |f| > t."""
        t = np.asarray(t, dtype=float)
        out = np.array([self.measures[self.values > ti].sum() for ti in np.ravel(t)])
        return float(out[0]) if t.ndim == 0 else out.reshape(t.shape)

    def schwarz(self, x):
        """f#(x) = f*(2|x|) on the centered interval of the same length."""
        return self.decreasing(2.0 * np.abs(np.asarray(x, dtype=float)))

    def schwarz_steps(self) -> list[tuple[float, float, float]]:
        """f# as explicit (left, right, value) pieces of the real line."""
        pieces = []
        left = 0.0
        for v, right in zip(self.values, self.breaks / 2):
            if left == 0.0:
                pieces.append((-right, right, float(v)))
            else:
                pieces.append((-right, -left, float(v)))
                pieces.append((left, right, float(v)))
            left = right
        return sorted(pieces)

    def lp_norm(self, p: float) -> float:
        if math.isinf(p):
            return float(self.values[0]) if self.values.size else 0.0
        return float((self.measures @ self.values ** p) ** (1.0 / p))

    def curve(self) -> ConcentrationCurve:
        sigma = np.concatenate([[0.0], self.breaks])
        cum = np.concatenate([[0.0], np.cumsum(self.values * self.measures)])
        return ConcentrationCurve(sigma, cum)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["value", "measure"])
            for v, m in zip(self.values, self.measures):
                writer.writerow([format(v, ".17g"), format(m, ".17g")])

    @classmethod
    def from_csv(cls, path) -> "RearrangementProfile":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return profile_from_cells([float(r["value"]) for r in rows],
                                  [float(r["measure"]) for r in rows])


def profile_from_cells(values, measures) -> RearrangementProfile:
    """Profile of a step function given cell values and cell measures."""
    v = np.abs(np.asarray(values, dtype=float))
    m = np.broadcast_to(np.asarray(measures, dtype=float), v.shape)
    if np.any(m <= 0):
        raise ValueError("cell measures must be positive")
    uniq, inv = np.unique(v, return_inverse=True)
    meas = np.bincount(inv, weights=m, minlength=uniq.size)
    return RearrangementProfile(uniq[::-1].copy(), meas[::-1].copy())


def profile(f) -> RearrangementProfile:
    if isinstance(f, RearrangementProfile):
        return f
    return profile_from_cells(f.values, f.mesh.h)


class Verdict(str, Enum):
    EQUAL = "Equal"
    LESS = "LessConcentrated"
    MORE = "MoreConcentrated"
    INCOMPARABLE = "Incomparable"


def _nonnegative_profile(f) -> RearrangementProfile:
    if isinstance(f, GridFunction) and np.any(f.values < 0):
        raise ValueError("concentration order is defined here for nonnegative functions")
    return profile(f)


def curve_difference(f, g) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints of both curves and int_0^sigma f* - int_0^sigma g* there.

    The difference is piecewise linear between merged breakpoints, so these
    values decide the order exactly.
    """
    cf, cg = _nonnegative_profile(f).curve(), _nonnegative_profile(g).curve()
    sigma = np.union1d(cf.sigma, cg.sigma)
    return sigma, cf(sigma) - cg(sigma)


def concentration_compare(f, g, slack: float = 0.0) -> Verdict:
    """Decide whether f is less concentrated than g (f < g), or the reverse.

    ``slack`` is an absolute allowance on the cumulative integrals; with the
    default the comparison is exact up to floating-point round-off.
    """
    sigma, d = curve_difference(f, g)
    scale = max(profile(f).curve().total, profile(g).curve().total, 1e-300)
    allow = slack + _ROUNDOFF * scale
    le = bool(np.all(d <= allow))
    ge = bool(np.all(d >= -allow))
    if le and ge:
        return Verdict.EQUAL
    if le:
        return Verdict.LESS
    if ge:
        return Verdict.MORE
    return Verdict.INCOMPARABLE


def hardy_littlewood_gap(f, g, h: float | None = None) -> float:
    """int f* g* - int |f g| (nonnegative)."""
    if isinstance(f, GridFunction) or isinstance(g, GridFunction):
        if not (isinstance(f, GridFunction) and isinstance(g, GridFunction)
                and f.mesh.same_as(g.mesh)):
            raise MeshMismatchError("Hardy-Littlewood gap needs two functions on one mesh")
        h, f, g = f.mesh.h, f.values, g.values
    h = 1.0 if h is None else float(h)
    a, b = np.abs(np.asarray(f, dtype=float)), np.abs(np.asarray(g, dtype=float))
    if a.shape != b.shape:
        raise MeshMismatchError("arrays differ in length")
    return float(h * (np.sort(a)[::-1] @ np.sort(b)[::-1]) - h * (a @ b))


def alternating_order(index: np.ndarray) -> np.ndarray:
    """Positions of a centered lattice ordered 0, +1, -1, +2, -2, ..."""
    key = 2 * np.abs(index) - (index > 0)
    return np.argsort(key, kind="stable")


def _check_centered(mesh: Mesh1D):
    idx = mesh.index
    if not np.array_equal(idx, -idx[::-1]):
        raise MeshMismatchError("target mesh is not centered at the origin")


def _arrange(f: GridFunction, target: Mesh1D):
    """Sorted values placed on target nodes; returns (values, dropped)."""
    if not f.mesh.shares_lattice(target):
        raise MeshMismatchError("Schwarz rearrangement needs the shared lattice")
    _check_centered(target)
    if abs(f.mesh.domain.measure - target.domain.measure) > target.h * (1 + 1e-9):
        raise MeshMismatchError(
            f"measure mismatch {f.mesh.domain.measure:.6g} vs "
            f"{target.domain.measure:.6g} exceeds one lattice cell")
    vals = np.sort(np.abs(f.values))[::-1]
    keep = min(vals.size, target.n)
    out = np.zeros(target.n)
    out[alternating_order(target.index)[:keep]] = vals[:keep]
    return out, vals[keep:]


def schwarz(f: GridFunction, target_mesh: Mesh1D) -> GridFunction:
    """Symmetric decreasing rearrangement on the centered mesh of Omega#.

    Sorted values fill the nodes in the order 0, +h, -h, +2h, ... so the
    result is nonincreasing in |x| and even up to that tie-break. If the
    source has more nodes than the target (at most one per component), the
    smallest values are dropped.
    """
    out, _ = _arrange(f, target_mesh)
    return GridFunction(target_mesh, out)


@dataclass
class PolyaSzegoGap:
    gap: float
    eps_h: float
    energy: float
    energy_sharp: float
    truncation: float
    kernel_defect: float
    dropped: int

    @property
    def roundoff(self) -> float:
        return 1e-12 * (abs(self.energy) + abs(self.energy_sharp))

    @property
    def holds(self) -> bool:
        return self.gap >= -self.eps_h - self.roundoff


def _lattice_energy(v, idx, table) -> float:
    T = table[np.abs(idx[:, None] - idx[None, :])]
    return float(v @ T @ v)


def polya_szego_gap(op: OperatorHandle, op_sharp: OperatorHandle, u: GridFunction) -> PolyaSzegoGap:
    """Energy drop E(u) - E(u#) under Schwarz symmetrization, with its slack.

    On the lattice, symmetric decreasing rearrangement cannot increase the
    energy as long as the off-diagonal kernel magnitudes decrease in the
    offset. ``eps_h`` bounds the two ways the discrete setting departs from
    that: values dropped because the centered mesh has fewer nodes
    (``truncation``), and offsets where the magnitudes fail to decrease
    (``kernel_defect``).
    """
    if not u.mesh.same_as(op.mesh):
        raise MeshMismatchError("u must live on the mesh of the first operator")
    if op.s != op_sharp.s or not op.mesh.shares_lattice(op_sharp.mesh):
        raise MeshMismatchError("operators differ in order or lattice")
    target = op_sharp.mesh
    sharp, dropped = _arrange(u, target)
    e_u = op.energy(u)
    e_sharp = op_sharp.energy(GridFunction(target, sharp))

    # full arrangement on the infinite lattice: the target nodes, then the
    # next alternating positions for any dropped values
    half = (target.n + 1) // 2 + dropped.size + 1
    ext = np.arange(-half, half + 1)
    ext_vals = np.zeros(ext.size)
    order = alternating_order(ext)
    full = np.concatenate([np.sort(np.abs(u.values))[::-1], np.zeros(ext.size)])[:ext.size]
    ext_vals[order] = full
    nz = ext_vals > 0
    idx, vals = ext[nz], ext_vals[nz]
    span = int(idx.max() - idx.min()) if idx.size else 0
    w = kernel_weights(op.s, op.mesh.h, max(span, 1))
    table = w.scaled
    truncation = 0.0
    if dropped.size:
        truncation = max(0.0, e_sharp - _lattice_energy(vals, idx, table))
    mags = -table[1:]
    majorant = np.maximum.accumulate(mags[::-1])[::-1]
    defect_tab = np.concatenate([[0.0], majorant - mags])
    kernel_defect = _lattice_energy(vals, idx, defect_tab) if defect_tab.any() else 0.0
    return PolyaSzegoGap(e_u - e_sharp, truncation + kernel_defect, e_u, e_sharp,
                         truncation, kernel_defect, int(dropped.size))
