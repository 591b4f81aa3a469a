import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import TWO, cached_op
from fraciso.domain import GridFunction, build_mesh, parse_domain, scale_domain
from fraciso.errors import ConvergenceError
from fraciso.fracop import assemble_operator
from fraciso.isoperimetry import SUITE_DOMAINS
from fraciso.spectral import (principal_eigenpair, rayleigh_quotient, refine_and_extrapolate,
                              richardson, second_eigenvalue)


@pytest.mark.parametrize("literal", SUITE_DOMAINS)
@pytest.mark.parametrize("s", [0.3, 0.7])
def test_eigenpair_contract(literal, s):
    op = cached_op(literal, s, 256)
    res = principal_eigenpair(op)
    u = res.eigenfunction
    assert u.values.min() > 0
    assert op.mass_inner(u, u) == pytest.approx(1.0, abs=1e-12)
    r = op.matrix @ u.values - res.lambda1h * op.mass * u.values
    assert np.linalg.norm(r) / np.sqrt(op.mesh.h) <= 1e-8 * res.lambda1h
    assert rayleigh_quotient(op, u) == pytest.approx(res.lambda1h, rel=1e-10)
    assert op.lambda1_estimate == res.lambda1h


@pytest.mark.parametrize("literal", SUITE_DOMAINS)
def test_principal_eigenvalue_is_simple(literal):
    op = cached_op(literal, 0.5, 128)
    first = principal_eigenpair(op)
    lam2 = second_eigenvalue(op, first)
    assert lam2 > first.lambda1h * (1 + 1e-6)
    assert lam2 == pytest.approx(np.linalg.eigvalsh(op.matrix)[1] / op.mesh.h, rel=1e-8)


def test_matches_dense_eigensolver():
    op = cached_op(TWO, 0.5, 256)
    lam = np.linalg.eigvalsh(op.matrix)[0] / op.mesh.h
    assert principal_eigenpair(op).lambda1h == pytest.approx(lam, rel=1e-10)


@given(st.integers(0, 10_000))
def test_rayleigh_quotient_bounded_below(seed):
    op = cached_op(TWO, 0.5, 64)
    lam = principal_eigenpair(op).lambda1h
    u = GridFunction(op.mesh, np.random.default_rng(seed).standard_normal(op.n))
    assert rayleigh_quotient(op, u) >= lam * (1 - 1e-12)


@pytest.mark.parametrize("inner,outer", [("(-1,-0.2),(0.2,1)", "(-1,1)"),
                                         ("(-0.5,0.5)", "(-1,1)"),
                                         ("(0,0.5),(1.5,2.5)", "(0,0.5),(0.75,1.25),(1.5,2.5)")])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_domain_monotonicity_exact(inner, outer, s):
    big = assemble_operator(build_mesh(parse_domain(outer), 128), s)
    small = assemble_operator(build_mesh(parse_domain(inner), h=big.mesh.h), s)
    assert small.mesh.is_submesh_of(big.mesh)
    assert principal_eigenpair(small).lambda1h >= principal_eigenpair(big).lambda1h


@pytest.mark.parametrize("t", [0.5, 2.0])
@pytest.mark.parametrize("literal", ["(-1,1)", TWO])
def test_dilation(t, literal):
    s = 0.5
    d = parse_domain(literal)
    lam = principal_eigenpair(cached_op(literal, s, 256)).lambda1h
    lam_t = principal_eigenpair(assemble_operator(build_mesh(scale_domain(d, t), 256), s)).lambda1h
    assert lam_t * t ** (2 * s) == pytest.approx(lam, rel=1e-10)


def test_positive_on_disconnected_domain():
    u = principal_eigenpair(cached_op(TWO, 0.5, 512)).eigenfunction
    assert u.values.min() > 0


def test_non_convergence_carries_trace():
    op = cached_op(TWO, 0.5, 64)
    with pytest.raises(ConvergenceError) as info:
        principal_eigenpair(op, tol=1e-16, max_iter=2)
    assert len(info.value.trace) == 2


def test_richardson_recovers_known_rate():
    M = [100, 200, 400, 800]
    vals = [3.0 + 5.0 / m for m in M]
    ex = richardson(M, vals)
    assert ex.order == pytest.approx(1.0, rel=1e-9)
    assert ex.value == pytest.approx(3.0, rel=1e-12)
    assert ex.monotone


def test_richardson_flags_non_monotone():
    with pytest.warns(RuntimeWarning):
        ex = richardson([1, 2, 4], [1.0, 0.5, 0.7])
    assert not ex.monotone and np.isnan(ex.order)


@pytest.mark.parametrize("M,vals", [([1, 2], [1.0, 2.0]), ([4, 2, 8], [1.0, 2.0, 3.0])])
def test_richardson_preconditions(M, vals):
    with pytest.raises(ValueError):
        richardson(M, vals)


def test_extrapolation_against_fine_mesh():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ex = refine_and_extrapolate(parse_domain("(-1,1)"), 0.5, [256, 512, 1024])
    fine = principal_eigenpair(cached_op("(-1,1)", 0.5, 4096)).lambda1h
    assert ex.value == pytest.approx(1.158, rel=0.01)
    assert abs(ex.value - fine) <= ex.error_bar
