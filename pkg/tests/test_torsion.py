import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import TWO, cached_op
from fraciso.domain import build_mesh, parse_domain, scale_mesh
from fraciso.errors import BracketError, FinitenessError
from fraciso.fracop import assemble_operator
from fraciso.isoperimetry import SUITE_DOMAINS, standard_alpha_grid
from fraciso.spectral import principal_eigenpair
from fraciso.torsion import (UNIT_BALL, ball_torsion_function, beta_grid, find_radius,
                             finiteness_radius, generalized_torsion, q_derivative_check, qsharp,
                             torsion, torsion_of_domain, unit_ball_cache)


@pytest.mark.parametrize("literal", SUITE_DOMAINS)
@pytest.mark.parametrize("alpha", [-10.0, 0.0, 0.5])
def test_torsion_result_invariants(literal, alpha):
    op = cached_op(literal, 0.5, 256)
    res = generalized_torsion(op, alpha)
    assert res.Q >= 0 and res.w.values.min() >= -1e-12
    assert res.energy == pytest.approx(alpha * res.l2sq + res.Q, rel=1e-9)
    assert res.functional == pytest.approx(res.Q, rel=1e-9)


def test_torsion_value_tends_to_half_pi():
    Q = [torsion(cached_op("(-1,1)", 0.5, M)).Q for M in (256, 512, 1024)]
    assert Q[0] < Q[1] < Q[2] < math.pi / 2
    assert Q[2] == pytest.approx(math.pi / 2, rel=1e-3)


@pytest.mark.parametrize("literal", SUITE_DOMAINS)
def test_q_monotone_on_standard_grid(literal):
    op = cached_op(literal, 0.5, 256)
    lam = principal_eigenpair(op).lambda1h
    Q = [generalized_torsion(op, a).Q for a in standard_alpha_grid(lam)]
    assert np.all(np.diff(Q) > 0)


@pytest.mark.parametrize("alpha", [-2.0, 0.0, 1.0])
def test_derivative_identity(alpha):
    op = cached_op(TWO, 0.5, 256)
    fd, exact = q_derivative_check(op, alpha, 1e-3)
    assert abs(fd - exact) / exact <= 1e-6


def test_derivative_check_rejects_bad_delta():
    with pytest.raises(ValueError):
        q_derivative_check(cached_op(TWO, 0.5, 64), 0.0, 0.0)


@pytest.mark.parametrize("literal", SUITE_DOMAINS)
def test_strongly_negative_shift_bound(literal):
    op = cached_op(literal, 0.5, 256)
    res = generalized_torsion(op, -1e3)
    assert res.Q <= op.mesh.domain.measure * 1e-3 * (1 + 1e-9)


def test_refusal_at_principal_eigenvalue():
    op = cached_op(TWO, 0.5, 128)
    lam = principal_eigenpair(op).lambda1h
    for a in (lam, 1.01 * lam):
        with pytest.raises(FinitenessError):
            generalized_torsion(op, a)


def test_refusal_computes_eigenvalue_on_demand():
    op = assemble_operator(build_mesh(parse_domain("(-1,1)"), 64), 0.5)
    assert op.lambda1_estimate is None
    with pytest.raises(FinitenessError):
        generalized_torsion(op, 5.0)
    assert op.lambda1_estimate is not None


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_cache_matches_direct_solves(s):
    cache = unit_ball_cache(s, 256)
    for beta in (-20.0, 0.0, 0.7 * cache.lambda1h):
        res = generalized_torsion(cache.op, beta)
        assert cache.q(beta) == pytest.approx(res.Q, rel=1e-10)
        assert cache.l2sq(beta) == pytest.approx(res.l2sq, rel=1e-10)
        np.testing.assert_allclose(cache.torsion_function(beta).values, res.w.values,
                                   rtol=1e-9, atol=1e-13)
    assert cache.lambda1h == pytest.approx(principal_eigenpair(cache.op).lambda1h, rel=1e-10)


def test_cache_table():
    cache = unit_ball_cache(0.5, 256)
    t = cache.table
    assert t.shape == (64, 3) and np.all(np.isfinite(t))
    assert np.all(np.diff(t[:, 0]) > 0) and np.all(np.diff(t[:, 1]) > 0)
    assert t[-1, 0] < cache.lambda1h
    g = beta_grid(2.0)
    assert g[0] == -64 and g[-1] < 2.0 and np.all(np.diff(g) > 0)


@given(st.floats(-50, 1.0), st.floats(0.3, 2.5))
def test_dilation_law_is_exact(alpha, R):
    cache = unit_ball_cache(0.5, 128)
    if alpha * R ** 1.0 >= cache.lambda1h:
        return
    op_R = assemble_operator(scale_mesh(cache.mesh, R), 0.5)
    direct = generalized_torsion(op_R, alpha).Q
    assert qsharp(cache, alpha, R) == pytest.approx(direct, rel=1e-9)


def test_ball_torsion_function_on_dilated_mesh():
    cache = unit_ball_cache(0.5, 128)
    w = ball_torsion_function(cache, 0.4, 1.3)
    op_R = assemble_operator(w.mesh, 0.5)
    np.testing.assert_allclose(w.values, generalized_torsion(op_R, 0.4).w.values, rtol=1e-9)
    assert w.integral() == pytest.approx(qsharp(cache, 0.4, 1.3), rel=1e-12)


@pytest.mark.parametrize("alpha", [-8.0, 0.0, 0.6])
def test_ball_self_radius(alpha):
    cache = unit_ball_cache(0.5, 512)
    Q = generalized_torsion(cache.op, alpha).Q
    assert find_radius(cache, alpha, Q, 1.0) == pytest.approx(1.0, rel=1e-7)


def test_radius_inverts_qsharp():
    cache = unit_ball_cache(0.7, 256)
    for alpha, R in [(-3.0, 0.4), (0.0, 0.9), (0.5, 1.1)]:
        Q = qsharp(cache, alpha, R)
        assert find_radius(cache, alpha, Q, 1.0) == pytest.approx(R, rel=1e-7)


def test_radius_bracket_failure():
    cache = unit_ball_cache(0.5, 128)
    with pytest.raises(BracketError):
        find_radius(cache, -1.0, 1e6, 1.0)
    with pytest.raises(ValueError):
        find_radius(cache, 0.0, -1.0, 1.0)


def test_finiteness_radius():
    cache = unit_ball_cache(0.5, 128)
    assert finiteness_radius(cache, -1.0) == math.inf
    R = finiteness_radius(cache, 0.5)
    assert R == pytest.approx(cache.lambda1h / 0.5)
    with pytest.raises(FinitenessError):
        qsharp(cache, 0.5, R)
    with pytest.raises(ValueError):
        qsharp(cache, 0.5, 0.0)


def test_torsion_of_domain():
    res = torsion_of_domain(UNIT_BALL, 0.5, 128)
    assert res.Q == pytest.approx(torsion(cached_op("(-1,1)", 0.5, 128)).Q, rel=1e-12)
