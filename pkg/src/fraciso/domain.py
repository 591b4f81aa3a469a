"""One-dimensional domains, lattice meshes and grid functions.

A domain is a finite union of disjoint open intervals. Meshes are always
restrictions of the global lattice ``h * Z`` (anchored at the origin), so
two meshes built with the same spacing can be compared node by node.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshMismatchError, UnderResolvedError

_ON_LATTICE_TOL = 1e-9
_PAIR_RE = re.compile(r"\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)")


@dataclass(frozen=True)
class Domain1D:
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.intervals:
            raise ValueError("a domain needs at least one interval")
        prev_b = -math.inf
        for a, b in self.intervals:
            if not a < b:
                raise ValueError(f"empty interval ({a}, {b})")
            if not a > prev_b:
                raise ValueError("intervals must be sorted with positive gaps")
            prev_b = b

    @property
    def measure(self) -> float:
        return math.fsum(b - a for a, b in self.intervals)

    @property
    def n_components(self) -> int:
        return len(self.intervals)

    def contains(self, other: "Domain1D") -> bool:
        return all(any(a <= c and d <= b for a, b in self.intervals)
                   for c, d in other.intervals)

    def to_literal(self) -> str:
        return ",".join(f"({a!r},{b!r})" for a, b in self.intervals)

    def __str__(self):
        return self.to_literal()


def make_domain(intervals) -> Domain1D:
    """Sort the intervals and merge any that overlap or touch."""
    pairs = [(float(a), float(b)) for a, b in intervals]
    if not pairs:
        raise ValueError("a domain needs at least one interval")
    for a, b in pairs:
        if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
            raise ValueError(f"invalid interval ({a}, {b})")
    pairs.sort()
    merged = [list(pairs[0])]
    for a, b in pairs[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return Domain1D(tuple((a, b) for a, b in merged))


def parse_domain(literal: str) -> Domain1D:
    """Parse a literal such as ``"(-1,-0.2),(0.2,1)"``."""
    text = literal.strip()
    pairs = _PAIR_RE.findall(text)
    leftover = _PAIR_RE.sub("", text).replace(",", "").strip()
    if not pairs or leftover:
        raise ValueError(f"cannot parse domain literal {literal!r}")
    try:
        return make_domain((float(a), float(b)) for a, b in pairs)
    except ValueError as exc:
        raise ValueError(f"invalid domain literal {literal!r}: {exc}") from None


def schwarz_ball(domain: Domain1D) -> Domain1D:
    """Centered interval with the same length as ``domain``."""
    r = domain.measure / 2
    return Domain1D(((-r, r),))


def scale_domain(domain: Domain1D, t: float) -> Domain1D:
    if not t > 0:
        raise ValueError(f"dilation factor must be positive, got {t}")
    return Domain1D(tuple((t * a, t * b) for a, b in domain.intervals))


def _strict_range(a: float, b: float, h: float) -> tuple[int, int]:
    """Lattice indices j with a < j*h < b (endpoints on the lattice excluded)."""
    ja, jb = a / h, b / h
    ra, rb = round(ja), round(jb)
    lo = ra + 1 if abs(ja - ra) <= _ON_LATTICE_TOL * max(1.0, abs(ja)) else math.floor(ja) + 1
    hi = rb - 1 if abs(jb - rb) <= _ON_LATTICE_TOL * max(1.0, abs(jb)) else math.ceil(jb) - 1
    return lo, hi


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Active lattice nodes of a domain.

    ``index`` holds the global lattice indices (node ``i`` sits at
    ``index[i] * h``); ``components`` are ``(start, stop)`` ranges into it,
    one per interval of the domain.
    """

    domain: Domain1D
    h: float
    index: np.ndarray
    components: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return int(self.index.size)

    @property
    def x(self) -> np.ndarray:
        return self.index * self.h

    @property
    def mass(self) -> np.ndarray:
        """Lumped mass: one cell of length ``h`` per active node."""
        return np.full(self.n, self.h)

    def same_as(self, other: "Mesh1D") -> bool:
        return (self is other
                or (self.h == other.h and np.array_equal(self.index, other.index)))

    def shares_lattice(self, other: "Mesh1D") -> bool:
        return math.isclose(self.h, other.h, rel_tol=1e-13, abs_tol=0.0)

    def is_submesh_of(self, other: "Mesh1D") -> bool:
        return self.shares_lattice(other) and bool(np.isin(self.index, other.index).all())

    def positions_in(self, other: "Mesh1D") -> np.ndarray:
        """Positions of this mesh's nodes inside ``other`` (a supermesh)."""
        if not self.is_submesh_of(other):
            raise MeshMismatchError("mesh is not a submesh of the target")
        return np.searchsorted(other.index, self.index)


def build_mesh(domain: Domain1D, M: int | None = None, *, h: float | None = None) -> Mesh1D:
    """Restrict the lattice of spacing ``|domain| / M`` (or ``h``) to ``domain``."""
    if (M is None) == (h is None):
        raise ValueError("give exactly one of M or h")
    if M is not None:
        if int(M) != M or M < 8:
            raise ValueError(f"M must be an integer >= 8, got {M}")
        h = domain.measure / M
    h = float(h)
    if not h > 0:
        raise ValueError("lattice spacing must be positive")

    chunks, comps, start = [], [], 0
    for a, b in domain.intervals:
        if b - a < 2 * h:
            raise UnderResolvedError(
                f"component ({a}, {b}) has length {b - a:.3g} < 2h = {2 * h:.3g}")
        lo, hi = _strict_range(a, b, h)
        if hi < lo:
            raise UnderResolvedError(f"component ({a}, {b}) holds no lattice node")
        chunks.append(np.arange(lo, hi + 1, dtype=np.int64))
        comps.append((start, start + hi - lo + 1))
        start += hi - lo + 1
    index = np.concatenate(chunks)
    index.setflags(write=False)
    return Mesh1D(domain, h, index, tuple(comps))


@dataclass(eq=False)
class GridFunction:
    """Nodal values on a mesh, extended by zero outside the domain."""

    mesh: Mesh1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n,):
            raise ValueError(f"expected {self.mesh.n} values, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function values must be finite")

    @classmethod
    def zeros(cls, mesh: Mesh1D) -> "GridFunction":
        return cls(mesh, np.zeros(mesh.n))

    @classmethod
    def sample(cls, mesh: Mesh1D, func) -> "GridFunction":
        return cls(mesh, np.asarray(func(mesh.x), dtype=float))

    def integral(self) -> float:
        return float(self.mesh.h * self.values.sum())

    def lp_norm(self, p: float) -> float:
        v = np.abs(self.values)
        if math.isinf(p):
            return float(v.max(initial=0.0))
        return float((self.mesh.h * np.sum(v ** p)) ** (1.0 / p))

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.mesh, self.values * float(c))

    __rmul__ = __mul__


def scale_mesh(mesh: Mesh1D, t: float) -> Mesh1D:
    """Dilate a mesh: same node indices, spacing ``t*h``."""
    return Mesh1D(scale_domain(mesh.domain, t), t * mesh.h, mesh.index, mesh.components)
