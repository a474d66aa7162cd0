import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from frshift.fredholm import (ProblemSpec, condition_ii, fredholm_verdict, n_xi,
                              tail_certificate)
from frshift.mellin import mult_s_p
from frshift.problem import read_problem
from frshift.so import FiberPoint

from conftest import LN2, catalog

X = np.linspace(-6, 6, 2401)


def fp(a=0, b=0, c=0, d=0, omega=0.0):
    return FiberPoint(a, b, c, d, omega, 1.0, "inf", 0.0)


def spec_of(name, **cfg):
    prob = read_problem(catalog(name + ".prob"), [f"{k}={v}" for k, v in cfg.items()])
    return ProblemSpec.from_problem(prob)


def test_symbol_examples():
    np.testing.assert_allclose(n_xi(fp(a=1, c=1), X, 2.0), 1, atol=1e-15)
    np.testing.assert_allclose(n_xi(fp(b=1, d=1), X, 2.0), -1, atol=1e-15)
    v = n_xi(fp(a=2, b=1, omega=LN2), 0.0, 2.0)
    assert v == pytest.approx((2 - 2 ** -0.5) / 2, abs=1e-15)
    assert abs(v) == pytest.approx(0.6464, abs=1e-4)


def test_symbol_survives_large_x():
    v = n_xi(fp(a=2, b=1, c=3, d=1, omega=LN2), np.array([-1e4, 1e4]), 2.0)
    assert np.all(np.isfinite(v))


def test_tail_certificate_examples():
    assert tail_certificate(fp(a=2, b=1, c=2, d=1, omega=LN2), 6.0, 2.0) == \
        pytest.approx(2 - 2 ** -0.5, abs=1e-15)
    assert tail_certificate(fp(a=1, b=1, c=1, d=1, omega=LN2), 6.0, 2.0) == \
        pytest.approx(1 - 2 ** -0.5, abs=1e-15)
    assert tail_certificate(fp(a=3, c=2), 1.0, 2.0) == pytest.approx(
        2 - 0.5 * 2 * math.exp(-2 * math.pi) / (1 - math.exp(-2 * math.pi)) * 5)
    with pytest.raises(ValueError):
        tail_certificate(fp(a=1), 0.0, 2.0)


cplx = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@given(cplx, cplx, cplx, cplx, st.floats(-2, 2), st.floats(0.1, 3.0),
       st.sampled_from([1.5, 2.0, 3.0]))
def test_tail_certificate_is_a_lower_bound(a, b, c, d, w, X0, p):
    pt = fp(a, b, c, d, w)
    cert = tail_certificate(pt, X0, p)
    xs = np.linspace(X0, X0 + 40, 8001)
    m = min(np.abs(n_xi(pt, xs, p)).min(), np.abs(n_xi(pt, -xs, p)).min())
    assert cert <= m + 1e-12


def test_coth_reflection():
    x = np.linspace(-5, 5, 101)
    # coth(pi(-x + i/p)) = -coth(pi(x - i/p)) = -conj(coth(pi(x + i/p)))
    np.testing.assert_allclose(mult_s_p(2.0, -x), -np.conj(mult_s_p(2.0, x)),
                               atol=1e-15)


@given(cplx, cplx, cplx, cplx, st.floats(-2, 2))
def test_conjugate_swap_symmetry(a, b, c, d, w):
    x = np.linspace(-6, 6, 241)
    n = n_xi(fp(a, b, c, d, w), x, 2.0)
    m = n_xi(fp(np.conj(c), np.conj(d), np.conj(a), np.conj(b), w), -x, 2.0)
    np.testing.assert_allclose(np.abs(m), np.abs(n), atol=1e-12)


@pytest.mark.parametrize("name", ["identity", "fredholm_const", "fo2_binomial"])
def test_phase_sweep_matches_analytic_minimum(name):
    spec = spec_of(name)
    v = fredholm_verdict(spec)
    a, b = complex(spec.a.eval_log(0.0)), complex(spec.b.eval_log(0.0))
    w = float(spec.shift.omega.eval_log(0.0))
    theta = np.linspace(0, 2 * np.pi, 200001)
    ref = np.min(np.abs(a - b * math.exp(-w / 2) * np.exp(1j * theta)))
    assert v.cond_ii_min_modulus == pytest.approx(ref, abs=1e-3)


def test_condition_ii_closed_forms():
    spec = spec_of("n_vanish")
    v = fredholm_verdict(spec)
    assert v.cond_ii_min_modulus < 1e-12
    assert v.cond_ii_witness[1] == pytest.approx(0.0, abs=1e-12)
    assert not v.fredholm_sufficient and v.status == "NOT-SUFFICIENT"
    # n = coth(pi(x + i/2)) = tanh(pi x)
    np.testing.assert_allclose(v.surface.values[0], np.tanh(np.pi * v.surface.x),
                               atol=1e-14)


def test_surface_shapes_and_minima():
    v = fredholm_verdict(spec_of("fredholm_mixed"))
    s = v.surface
    assert s.values.shape == (len(s.fibers), len(s.x))
    np.testing.assert_array_equal(s.minima, np.abs(s.values).min(axis=1))
    assert len(list(s.rows())) == s.values.size
    assert v.cond_ii_min_modulus == s.minima.min()


def test_empty_clusters_rejected():
    from frshift.so import ClusterSet
    spec = spec_of("identity")
    empty = ClusterSet("zero", [], 1e-3, np.array([]), np.zeros((0, 6)), [])
    with pytest.raises(ValueError):
        condition_ii(spec, empty, empty, X)


@pytest.mark.parametrize("name, sufficient, status", [
    ("identity", True, "SUFFICIENT"),
    ("fredholm_const", True, "SUFFICIENT"),
    ("fo2_binomial", True, "SUFFICIENT"),
    ("fredholm_full", True, "SUFFICIENT"),
    ("fredholm_mixed", True, "SUFFICIENT"),
    ("n_vanish", False, "NOT-SUFFICIENT"),
    ("shifted_vanish", False, "NOT-SUFFICIENT"),
    ("none_branch", False, "NOT-SUFFICIENT"),
])
def test_catalog_verdicts(name, sufficient, status):
    v = fredholm_verdict(spec_of(name))
    assert v.fredholm_sufficient is sufficient
    assert v.status == status
    kv = v.key_values()
    assert list(kv) == ["branch_plus", "branch_minus", "min_abs_n", "tail_cert",
                        "sufficient"]
    assert kv["sufficient"] == str(sufficient).lower()


def test_constant_data_minimum():
    v = fredholm_verdict(spec_of("fredholm_const"))
    assert v.cond_ii_min_modulus >= 2 - 2 ** -0.5 - 1e-12
    assert v.tail_certificate == pytest.approx(2 - 2 ** -0.5, abs=1e-12)


def test_shift_free_degeneration():
    # b = d = 0: the verdict reduces to a, c bounded away from 0 and a
    # non-vanishing coth combination, evaluated directly
    spec = ProblemSpec("2 + 0.5*sigm(ln(t))", "0", "1 - 0.5*sigm(ln(t))", "0",
                       "0.5")
    v = fredholm_verdict(spec)
    for pt in v.surface.fibers:
        s = mult_s_p(2.0, v.surface.x)
        direct = pt.a * (1 + s) / 2 + pt.c * (1 - s) / 2
        np.testing.assert_allclose(v.surface.values[v.surface.fibers.index(pt)],
                                   direct, atol=1e-14)
    assert v.fredholm_sufficient


def test_tiny_margin_is_undecided():
    spec = ProblemSpec(repr(2 ** -0.5), "1", "1", "0", repr(LN2))
    v = fredholm_verdict(spec)
    assert v.status == "UNDECIDED" and not v.fredholm_sufficient


def test_inconclusive_tail():
    # a narrow symbol grid leaves the coth perturbation bound too large to
    # certify anything beyond X, although every grid value clears zero
    v = fredholm_verdict(spec_of("fredholm_const", **{"x.max": 0.05, "x.nodes": 11}))
    assert v.cond_ii_min_modulus > 1.0
    assert v.tail_certificate <= 0
    assert v.status == "INCONCLUSIVE-TAIL" and not v.fredholm_sufficient
