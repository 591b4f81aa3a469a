import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from fraciso.specfun import (FracOrder, ball_torsion_coefficient, ball_torsion_profile,
                             gamma_fn, gamma_minimum, normalization_gamma,
                             unit_ball_torsional_rigidity_exact, unit_ball_volume)


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 1.4616, 2.5, 7.0, 30.0, 120.5])
def test_gamma_against_mpmath(x):
    assert gamma_fn(x) == pytest.approx(float(mpmath.gamma(x)), rel=1e-13)


@given(st.floats(min_value=1e-3, max_value=150.0))
def test_gamma_recurrence(x):
    assert gamma_fn(x + 1) == pytest.approx(x * gamma_fn(x), rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5, float("nan")])
def test_gamma_rejects_nonpositive(x):
    with pytest.raises(ValueError):
        gamma_fn(x)


def test_gamma_minimum():
    x0, g0 = gamma_minimum()
    assert x0 == pytest.approx(1.4616321449683622, abs=1e-6)
    assert g0 == pytest.approx(0.8856031944108887, rel=1e-12)


def _gamma_oracle(N, s):
    # 2^{2s} s Gamma((N+2s)/2) / (pi^{N/2} Gamma(1-s)), all in mpmath
    return float(mpmath.mpf(4) ** s * s * mpmath.gamma((N + 2 * mpmath.mpf(s)) / 2)
                 / (mpmath.pi ** (mpmath.mpf(N) / 2) * mpmath.gamma(1 - mpmath.mpf(s))))


@pytest.mark.parametrize("N,s,expected", [(1, 0.5, 1 / math.pi), (2, 0.5, 1 / (2 * math.pi))])
def test_normalization_known_values(N, s, expected):
    assert normalization_gamma(FracOrder(s, N)) == pytest.approx(expected, rel=1e-12, abs=1e-10)


@given(st.integers(1, 6), st.floats(0.01, 0.99))
def test_normalization_against_mpmath(N, s):
    assert normalization_gamma(FracOrder(s, N)) == pytest.approx(_gamma_oracle(N, s), rel=1e-12)


def test_normalization_vanishes_in_local_limit():
    assert normalization_gamma(FracOrder(1.0, 1)) == 0.0


@pytest.mark.parametrize("s", [0.3, 0.5, 0.8])
def test_normalization_from_fourier_integral(s):
    # gamma(1,s)^-1 = int_R (1 - cos t) / |t|^{1+2s} dt
    near, _ = quad(lambda t: (1 - math.cos(t)) / t ** (1 + 2 * s), 0, 1, epsabs=1e-14)
    osc, _ = quad(lambda t: t ** (-1 - 2 * s), 1, math.inf, weight="cos", wvar=1.0)
    val = 2 * (near + 1 / (2 * s) - osc)
    assert normalization_gamma(FracOrder(s, 1)) == pytest.approx(1 / val, rel=1e-9)


def test_unit_interval_coefficient_is_one():
    assert ball_torsion_coefficient(FracOrder(0.5, 1)) == pytest.approx(1.0, abs=1e-12)


S_GRID = np.round(np.arange(0.05, 0.951, 0.05), 2)


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
def test_coefficient_bounds(N):
    bound = 1 / gamma_minimum()[1] if N == 1 else 1.0
    for s in S_GRID:
        c = ball_torsion_coefficient(FracOrder(float(s), N))
        assert 0 < c <= bound + 1e-12
    assert bound == pytest.approx(1.1292, abs=1e-4) or N > 1


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_torsional_rigidity_against_quadrature(N, s):
    o = FracOrder(s, N)
    area = N * unit_ball_volume(N)
    radial, _ = quad(lambda r: ball_torsion_profile(o, r) * r ** (N - 1), 0, 1,
                     epsabs=1e-14, epsrel=1e-13, limit=200)
    assert unit_ball_torsional_rigidity_exact(o) == pytest.approx(area * radial, rel=1e-10)


def test_unit_interval_rigidity_is_half_pi():
    assert unit_ball_torsional_rigidity_exact(FracOrder(0.5, 1)) == pytest.approx(math.pi / 2,
                                                                                  rel=1e-12)


def test_profile_shape():
    o = FracOrder(0.3, 2)
    assert ball_torsion_profile(o, 0.0) == pytest.approx(ball_torsion_coefficient(o))
    assert ball_torsion_profile(o, 1.0) == 0.0
    assert ball_torsion_profile(o, 1.5) == 0.0
    assert ball_torsion_profile(o, 1 - 1e-12) < 1e-3
    r = np.linspace(0, 1, 50)
    assert np.all(np.diff(ball_torsion_profile(o, r)) <= 0)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_classical_limit(N):
    # s = 1: the torsion function of the unit ball is (1 - r^2) / (2N)
    assert ball_torsion_coefficient(FracOrder(1.0, N)) == pytest.approx(1 / (2 * N), rel=1e-12)


@pytest.mark.parametrize("s,N", [(0.0, 1), (1.2, 1), (-0.1, 2), (0.5, 0), (0.5, 1.5)])
def test_order_validation(s, N):
    with pytest.raises(ValueError):
        FracOrder(s, N)


def test_unit_ball_volume():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)
