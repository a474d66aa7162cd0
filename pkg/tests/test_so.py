import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from frshift.expr import parse_expr
from frshift.so import (CERT_TOLERANCE, CertificationError, cluster_tuples,
                        oscillation, so_certify)

LN2 = math.log(2.0)


def test_oscillation_meets_mean_value_bound():
    # |d/dx sin(llog)| <= 1/((1+ln(1+x))(1+x)), so a window of width ln 2
    # at x = e^6 oscillates by at most ln2/(1+e^6-ln2) (far below 0.099)
    e = parse_expr("sin(llog(t))")
    x = math.exp(6.0)
    osc = oscillation(e, 0.5, log_r=x)
    assert osc <= LN2 / (1 + 6)
    bound = LN2 / ((1 + math.log(1 + x - LN2)) * (1 + x - LN2))
    assert osc <= bound * (1 + 1e-9)


def test_oscillation_with_plain_r():
    e = parse_expr("sin(ln(t))")
    # over [r/2, r] ln t sweeps an interval of width ln 2
    osc = oscillation(e, 0.5, r=1.0, samples=2001)
    ref = math.sin(0.0) - math.sin(-LN2)
    assert osc == pytest.approx(ref, rel=1e-6)


def test_certification_regression():
    assert so_certify(parse_expr("sin(llog(t))")).passed
    rep = so_certify(parse_expr("sin(ln(t))"))
    assert not rep.passed
    assert rep.osc_inf[-1] > CERT_TOLERANCE


@pytest.mark.parametrize("text", ["1", "-2.5", "3*i"])
def test_constants_have_zero_oscillation(text):
    rep = so_certify(parse_expr(text))
    assert rep.passed
    assert max(rep.osc_zero + rep.osc_inf) == 0.0


@pytest.mark.parametrize("text, ok", [
    ("2+0.5*sigm(ln(t))", True),
    ("tanh(ln(t))", True),
    ("exp(i*llog(t))", True),
    ("1/(1+ln(t)^2)", True),
    ("t", False),
    ("ln(t)", False),
    ("1/sin(llog(t))", False),
])
def test_certification_table(text, ok):
    assert so_certify(parse_expr(text)).passed is ok


def test_certify_validates_schedule():
    with pytest.raises(ValueError):
        so_certify(parse_expr("1"), schedule=(1.0, 2.0))


@given(st.floats(0.05, 0.95), st.floats(-40, 40))
def test_oscillation_nonnegative_and_bounded(lam, lr):
    e = parse_expr("sin(llog(t))")
    osc = oscillation(e, lam, log_r=lr)
    assert 0.0 <= osc <= 2.0


def test_clusters_of_constants_collapse_to_one_point():
    cs = cluster_tuples(parse_expr("2"), parse_expr("1"), omega=parse_expr(repr(LN2)))
    assert len(cs) == 1
    fp = cs.points[0]
    assert (fp.a, fp.b, fp.omega, fp.kappa) == (2, 1, LN2, 1.0)
    assert fp.alpha_prime == pytest.approx(2.0)


def test_clusters_of_oscillating_coefficient_sweep_its_range():
    a = parse_expr("sin(llog(t))")
    cs = cluster_tuples(a, parse_expr("0"), omega=parse_expr("0.1"))
    vals = np.array([fp.a.real for fp in cs.points])
    # partial limits along x = e^u, u in [2, 9]: llog runs over [ln 3.1, ln 10]
    lo = math.log(1 + math.log(1 + math.exp(2.0)))
    hi = math.log(1 + math.log(1 + math.exp(9.0)))
    grid = np.sin(np.linspace(lo, hi, 1000))
    assert vals.min() == pytest.approx(grid.min(), abs=2e-3)
    assert vals.max() == pytest.approx(grid.max(), abs=2e-3)
    # every raw sample lies within epsilon of a representative
    reps = cs.samples[[int(np.argmin(np.abs(cs.log_t - fp.log_t))) for fp in cs.points]]
    d = np.abs(cs.samples[:, None, :] - reps[None, :, :]).max(axis=2).min(axis=1)
    assert d.max() <= cs.epsilon
    assert sum(cs.sizes) == len(cs.log_t)


def test_sigmoid_endpoint_limits():
    a = parse_expr("2+0.5*sigm(ln(t))")
    om = parse_expr("0.5*sigm(ln(t))")
    c0 = cluster_tuples(a, parse_expr("1"), omega=om, endpoint="zero")
    ci = cluster_tuples(a, parse_expr("1"), omega=om, endpoint="inf")
    assert c0.points[0].a.real == pytest.approx(2.0, abs=1e-3)
    # sampling stops at u = 9 where sigm is within 1.3e-4 of 1
    top = max(ci.points, key=lambda fp: fp.log_t)
    assert top.a.real == pytest.approx(2.5, abs=1e-3)
    assert top.omega == pytest.approx(0.5, abs=1e-3)
    assert top.kappa == pytest.approx(1.0, abs=1e-3)


def test_uncertified_input_is_rejected():
    with pytest.raises(CertificationError):
        cluster_tuples(parse_expr("sin(ln(t))"), parse_expr("1"),
                       omega=parse_expr("0.1"))
