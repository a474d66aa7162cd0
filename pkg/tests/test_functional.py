import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from frshift.functional import (BinomialOperator, NonConvergenceError,
                                SamplingError, apply_binomial,
                                check_fo_conditions, neumann_solve,
                                transplant_check)
from frshift.mellin import SampledFunction, make_grid
from frshift.so import CertificationError
from frshift.validate import bump

from conftest import LN2


def _bump(grid, p=2.0, center=0.0, width=1.0, freq=0.0):
    return SampledFunction.from_function(grid, bump(center, width, freq, p))


def test_fo1_decision():
    dec = check_fo_conditions(BinomialOperator("2", "1", repr(LN2)))
    assert dec.branch == "FO1" and dec.status == "DECIDED"
    m = 2 - 2 ** -0.5
    for lo, hi in dec.limits.values():
        assert lo == pytest.approx(m, abs=1e-12) and hi == pytest.approx(m, abs=1e-12)
    assert dec.inf_abs_a == 2.0
    assert dec.predicted_ratio == pytest.approx(2 ** -1.5)


def test_fo2_decision():
    dec = check_fo_conditions(BinomialOperator("1", "2", repr(LN2)))
    assert dec.branch == "FO2"
    limsup = max(hi for _, hi in dec.limits.values())
    assert limsup == pytest.approx(1 - 2 * 2 ** -0.5, abs=1e-12)
    assert dec.inf_abs_b == 2.0


def test_small_constant_shift_is_fo1_with_small_margin():
    dec = check_fo_conditions(BinomialOperator("1", "1", "1e-3"))
    assert dec.branch == "FO1"
    lo = min(v[0] for v in dec.limits.values())
    assert lo == pytest.approx(1 - math.exp(-5e-4), rel=1e-9)
    assert lo == pytest.approx(5.0e-4, rel=1e-3)


def test_identity_shift_rejected_upstream():
    with pytest.raises(CertificationError):
        check_fo_conditions(BinomialOperator("1", "1", "0"))


def test_zero_margin_is_undecided():
    # |a| = |b| 2^{-1/2} exactly
    dec = check_fo_conditions(BinomialOperator(repr(2 ** -0.5), "1", repr(LN2)))
    assert dec.branch == "NONE" and dec.status == "UNDECIDED-NEAR-BOUNDARY"


def test_margins_changing_sign_between_endpoints():
    dec = check_fo_conditions(BinomialOperator("1 + 2*sigm(ln(t))", "2", repr(LN2)))
    assert dec.branch == "NONE" and dec.status == "DECIDED"
    assert dec.limits["zero"][1] < 0 < dec.limits["inf"][0]


def test_coarse_clusters_trigger_sampling_error():
    from frshift.so import cluster_tuples
    op = BinomialOperator("2 + sin(llog(t))", "1", repr(LN2))
    om = op.shift.omega
    coarse = cluster_tuples(op.a, op.b, omega=om, endpoint="inf", samples=3)
    with pytest.raises(SamplingError):
        check_fo_conditions(op, clusters_inf=coarse)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 2.0),
       st.floats(-1.0, 1.0), st.sampled_from([1.5, 2.0, 3.0]))
def test_branches_are_mutually_exclusive(a0, a1, b0, w, p):
    if abs(w) < 1e-2:
        w = 0.5
    op = BinomialOperator(f"{a0!r} + {a1!r}*sigm(ln(t))", repr(b0), repr(w), p)
    dec = check_fo_conditions(op)
    lo = min(v[0] for v in dec.limits.values())
    hi = max(v[1] for v in dec.limits.values())
    assert not (lo > 0 and hi < 0)
    if dec.branch == "FO1":
        assert lo > 1e-6 and dec.inf_abs_a > 1e-6
    elif dec.branch == "FO2":
        assert hi < -1e-6 and dec.inf_abs_b > 1e-6
    else:
        assert not (lo > 1e-6 and dec.inf_abs_a > 1e-6)
        assert not (hi < -1e-6 and dec.inf_abs_b > 1e-6)


def test_trivial_solve(grid12):
    op = BinomialOperator("2", "0", repr(LN2))
    f = _bump(grid12)
    res = neumann_solve(op, f, check_fo_conditions(op))
    assert res.iterations == 1
    np.testing.assert_allclose(res.u.values, f.values / 2)


def _check_solution(op, f, res, tol):
    back = apply_binomial(op, res.u)
    assert (back - f).norm(op.p) / f.norm(op.p) <= tol
    hist = np.array(res.history)
    assert np.all(np.diff(np.log(hist[:-1])) < 0)


def test_fo1_solve(grid12):
    op = BinomialOperator("2", "1", repr(LN2))
    f = _bump(grid12)
    dec = check_fo_conditions(op)
    res = neumann_solve(op, f, dec)
    assert res.iterations <= 25 and res.residual <= 1e-8
    _check_solution(op, f, res, 1e-8)
    rates = np.array(res.history[1:]) / np.array(res.history[:-1])
    assert rates[-1] <= dec.predicted_ratio + 0.1


def test_fo2_solve_on_wide_grid():
    # the shift drives the FO2 iterates towards t -> 0, so the grid needs room
    op = BinomialOperator("1", "2", repr(LN2))
    g = make_grid(64, 16384)
    f = _bump(g)
    dec = check_fo_conditions(op)
    res = neumann_solve(op, f, dec, max_iter=80)
    assert res.residual <= 1e-8
    _check_solution(op, f, res, 1e-8)
    rates = np.array(res.history[1:]) / np.array(res.history[:-1])
    assert rates[-1] <= dec.predicted_ratio + 0.1


def test_fo2_mirror_solve(grid24):
    op = BinomialOperator("1", "2", repr(-LN2))
    f = _bump(grid24)
    res = neumann_solve(op, f, check_fo_conditions(op), max_iter=40)
    assert res.residual <= 1e-8
    _check_solution(op, f, res, 1e-8)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_solve_other_exponents(grid24, p):
    op = BinomialOperator("2 + 0.5*sigm(ln(t))", "1", "0.5*sigm(ln(t)) + 0.3", p)
    dec = check_fo_conditions(op)
    assert dec.branch == "FO1"
    f = _bump(grid24, p=p, freq=1.0)
    res = neumann_solve(op, f, dec)
    _check_solution(op, f, res, 1e-8)


def test_non_convergence_carries_last_iterate(grid12):
    op = BinomialOperator("2", "1", repr(LN2))
    f = _bump(grid12)
    with pytest.raises(NonConvergenceError) as info:
        neumann_solve(op, f, check_fo_conditions(op), max_iter=3)
    res = info.value.result
    assert res.iterations == 3 and len(res.history) == 3 and res.residual > 1e-8


def test_no_branch_refuses_to_solve(grid12):
    op = BinomialOperator(repr(2 ** -0.5), "1", repr(LN2))
    with pytest.raises(ValueError):
        neumann_solve(op, _bump(grid12), check_fo_conditions(op))


def test_zero_rhs(grid12):
    op = BinomialOperator("2", "1", repr(LN2))
    f = SampledFunction(grid12, np.zeros(grid12.n, complex))
    res = neumann_solve(op, f, check_fo_conditions(op))
    assert res.iterations == 0 and not np.any(res.u.values)


def test_transplant_without_shift_term(grid12):
    op = BinomialOperator("2 + 0.5*sigm(ln(t))", "0", repr(LN2))
    assert transplant_check(op, _bump(grid12)).discrepancy <= 1e-12


def test_transplant_with_shift(grid12):
    op = BinomialOperator("2", "1", repr(LN2))
    rep = transplant_check(op, _bump(grid12))
    assert rep.discrepancy <= 1e-4


def test_transplant_zero_function(grid12):
    op = BinomialOperator("2", "1", repr(LN2))
    f = SampledFunction(grid12, np.zeros(grid12.n, complex))
    assert transplant_check(op, f).discrepancy == 0.0


def test_transplant_resolution_guard(grid12):
    from frshift.functional import ResolutionError
    op = BinomialOperator("2", "1", repr(LN2))
    with pytest.raises(ResolutionError):
        transplant_check(op, _bump(grid12, center=5.0), n_y=256)
