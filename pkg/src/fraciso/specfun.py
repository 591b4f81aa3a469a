"""Closed-form special functions used across the package.

Everything here is valid for any dimension ``N >= 1``. The PDE modules are
one-dimensional, but the ball torsion formulas are kept general so they can
serve as independent checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class FracOrder:
    """Fractional order ``s`` together with the space dimension ``N``.

    ``s = 1`` (the classical Laplacian) is tolerated here so closed forms can
    be checked in the local limit; operator assembly rejects it.
    """

    s: float
    N: int = 1

    def __post_init__(self):
        if not (0.0 < self.s <= 1.0):
            raise ValueError(f"order s must lie in (0, 1), got {self.s}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"dimension N must be a positive integer, got {self.N}")

    @property
    def is_fractional(self) -> bool:
        return self.s < 1.0


def _lanczos(x: float) -> float:
    # valid for x >= 0.5
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    # split the power to delay overflow for large x
    half = t ** (0.5 * (x + 0.5))
    return _SQRT_2PI * half * half * math.exp(-t) * acc


def gamma_fn(x: float) -> float:
    """Gamma function for positive real ``x`` (relative error below 1e-13)."""
    x = float(x)
    if not x > 0.0 or math.isnan(x):
        raise ValueError(f"gamma_fn is defined here for x > 0 only, got {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * _lanczos(1.0 - x))
    return _lanczos(x)


@lru_cache(maxsize=None)
def gamma_minimum() -> tuple[float, float]:
    """Location and value of the minimum of Gamma on [1, 3]."""
    res = minimize_scalar(gamma_fn, bounds=(1.0, 3.0), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x), float(res.fun)


def unit_ball_volume(N: int) -> float:
    """Lebesgue measure of the unit ball in R^N (2 when N = 1)."""
    return math.pi ** (N / 2) / gamma_fn(N / 2 + 1)


def normalization_gamma(order: FracOrder) -> float:
    """Normalising constant of the fractional Laplacian kernel."""
    N, s = order.N, order.s
    if s == 1.0:
        # the constant carries a factor 1/Gamma(1-s), which vanishes at s = 1
        return 0.0
    return (2.0 ** (2 * s) * s * gamma_fn((N + 2 * s) / 2)
            / (math.pi ** (N / 2) * gamma_fn(1 - s)))


def ball_torsion_coefficient(order: FracOrder) -> float:
    """Peak value of the torsion function of the unit ball."""
    N, s = order.N, order.s
    return gamma_fn(N / 2) / (4.0 ** s * gamma_fn(1 + s) * gamma_fn((N + 2 * s) / 2))


def ball_torsion_profile(order: FracOrder, r):
    """Torsion function of the unit ball as a function of the radius.

    Accepts scalars or arrays; returns ``c(N, s) * (1 - r^2)^s`` inside the
    ball and zero outside.
    """
    r = np.abs(np.asarray(r, dtype=float))
    inside = np.clip(1.0 - r * r, 0.0, None)
    out = ball_torsion_coefficient(order) * inside ** order.s
    return float(out) if out.ndim == 0 else out


def unit_ball_torsional_rigidity_exact(order: FracOrder) -> float:
    """Integral of the unit-ball torsion function over the ball."""
    N, s = order.N, order.s
    a = (N + 2 * s) / 2
    return (math.pi ** (N / 2) * gamma_fn(N / 2)
            / (4.0 ** s * gamma_fn(a) * gamma_fn(a + 1)))
