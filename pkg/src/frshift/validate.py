"""Identity and invariant suite behind ``frshift validate``.

Each check returns a :class:`CheckResult` with the measured quantity and
its threshold.  Random inputs come from ``numpy.random.default_rng(seed)``
so a given seed always yields the same report.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .expr import parse_expr
from .fredholm import ProblemSpec, fredholm_verdict, n_xi
from .functional import (BinomialOperator, apply_binomial, check_fo_conditions,
                         neumann_solve, transplant_check)
from .mellin import SampledFunction, make_grid, mult_r_p_beta, mult_s_p
from .operators import (R, S, b_xi_eval, finite_section, kernel_transform,
                        mult, op_R, op_R_quadrature, op_S, op_S_quadrature,
                        pdo, shift_op, symbol_a_at, symbol_c)
from .problem import read_problem
from .shift import Shift, endpoint_decay, inverse_shift, validate_sos
from .so import FiberPoint, cluster_tuples, so_certify

__all__ = ["CheckResult", "CHECKS", "run_suite", "format_suite", "bump",
           "catalog_paths"]

LN2 = math.log(2.0)
CATALOG = os.path.join(os.path.dirname(__file__), "catalog")
CATALOG_SIX = ("identity", "n_vanish", "fredholm_const", "fo2_binomial",
               "fredholm_full", "shifted_vanish")
DESIGNED_FAILURES = ("n_vanish", "shifted_vanish")


def catalog_paths():
    """The six regression problems, in catalog order."""
    return [os.path.join(CATALOG, f"{name}.prob") for name in CATALOG_SIX]


@dataclass
class CheckResult:
    name: str
    measured: float
    threshold: float
    passed: bool
    detail: str = ""


def bump(center=0.0, width=1.0, freq=0.0, p=2.0):
    """Callable of ``x = ln t``: a Gaussian in ``Phi`` coordinates mapped back
    to ``L^p(dt)`` (so ``t**(1/p) f`` is the Gaussian)."""
    def f(x):
        x = np.asarray(x, dtype=float)
        g = np.exp(-0.5 * ((x - center) / width) ** 2 + 1j * freq * x)
        return g * np.exp(-x / p)
    return f


def random_bumps(rng, count, p, spread=2.0):
    out = []
    for _ in range(count):
        out.append(bump(rng.uniform(-spread, spread), rng.uniform(0.6, 1.4),
                        rng.uniform(-1.0, 1.0), p))
    return out


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


# --------------------------------------------------------------------------
# checks

def check_symbol_identity(rng):
    x = np.linspace(-6, 6, 2401)
    err = max(float(np.max(np.abs(mult_s_p(p, x) ** 2
                                  - mult_r_p_beta(p, np.pi, x) ** 2 - 1)))
              for p in (1.5, 2.0, 3.0))
    return CheckResult("symbol identity s^2 - r^2 = 1", err, 1e-13, err <= 1e-13)


def check_s_r_identity(rng, count=10):
    g = make_grid(12, 4096)
    worst = 0.0
    for p in (1.5, 2.0, 3.0):
        for fn in random_bumps(rng, count, p):
            f = SampledFunction.from_function(g, fn)
            lhs = (S @ S - R @ R)(f, p).values
            worst = max(worst, _rel(lhs, f.values))
    return CheckResult("S-R identity S^2 - R^2 = I", worst, 1e-10, worst <= 1e-10)


def _quadrature_errors(rng, probes=20):
    p = 2.0
    g = make_grid(24, 4096)
    f = SampledFunction.from_function(g, bump(rng.uniform(-1, 1), 1.0,
                                              rng.uniform(-0.5, 0.5), p))
    sf, rf = op_S(f, p).values, op_R(f, p).values
    interior = np.flatnonzero(np.abs(g.x) <= 3)
    js = np.sort(rng.choice(interior, probes, replace=False))
    es = max(abs(op_S_quadrature(f, j) - sf[j]) for j in js) / np.max(np.abs(sf))
    er = max(abs(op_R_quadrature(f, j) - rf[j]) for j in js) / np.max(np.abs(rf))
    halving = max(abs(op_S_quadrature(f, j, 2) - op_S_quadrature(f, j))
                  for j in js) / np.max(np.abs(sf))
    return float(es), float(er), float(halving)


def check_quadrature(rng):
    es, er, eh = _quadrature_errors(rng)
    worst = max(es, er, eh)
    return CheckResult("S and R against direct quadrature", worst, 1e-5,
                       worst <= 1e-5,
                       f"S {es:.2e}, R {er:.2e}, step halving {eh:.2e}")


def check_kernel_transform(rng):
    err = abs(kernel_transform(1.0, 0.0, 2.0) - (-1j))
    return CheckResult("kernel transform at k=1, y=0, p=2 equals -i", err,
                       1e-8, err <= 1e-8)


def _realization_error(omega, fn, p=2.0):
    g = make_grid(24, 4096)
    sh = Shift(omega)
    f = SampledFunction.from_function(g, fn)
    lhs = (shift_op(sh) @ R)(f, p).values
    rhs = pdo(symbol_c(sh, p))(f, p).values
    inner = np.abs(g.x) <= g.L / 2
    return float(np.max(np.abs(lhs - rhs)[inner]) / np.max(np.abs(lhs)))


def check_pdo_realization(rng):
    fn = bump(rng.uniform(-1, 1), 1.0, 0.0)
    errs = [_realization_error(w, fn) for w in (repr(LN2), "0.5*sigm(ln(t))")]
    worst = max(errs)
    return CheckResult("Phi W R Phi^-1 = Op(c)", worst, 1e-5, worst <= 1e-5,
                       ", ".join(f"{e:.2e}" for e in errs))


def check_factorization(rng):
    sh = Shift("0.5*sigm(ln(t))")
    p = 2.0
    t = np.exp(np.linspace(-5, 5, 20))[:, None]
    x = np.linspace(-5, 5, 20)[None, :]
    w_t = sh.omega.eval_log(np.log(t))
    worst = 0.0
    for endpoint in ("zero", "inf"):
        fp = cluster_tuples(parse_expr("1"), parse_expr("0"), omega=sh.omega,
                            endpoint=endpoint).points[0]
        lhs = symbol_a_at(w_t, p, x) - symbol_a_at(fp.omega, p, x)
        rhs = (w_t - fp.omega) * mult_r_p_beta(p, np.pi, x) * b_xi_eval(fp, sh, p, t, x)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return CheckResult("factorization a(t,x) - a(xi,x)", worst, 1e-10,
                       worst <= 1e-10)


def neumann_cases():
    """The two solver cases: FO1 ``2I - W`` and its FO2 mirror ``I - 2W^-1``
    analogue ``a=1, b=2, omega=-ln 2`` (same contraction ratio)."""
    return [("FO1", "2", "1", repr(LN2), 12, 4096, 25),
            ("FO2", "1", "2", repr(-LN2), 24, 4096, 40)]


def check_neumann(rng):
    worst = 0.0
    detail = []
    ok = True
    for label, a, b, w, L, n, cap in neumann_cases():
        op = BinomialOperator(a, b, w)
        dec = check_fo_conditions(op)
        g = make_grid(L, n)
        f = SampledFunction.from_function(g, bump(rng.uniform(-1, 1), 1.0))
        res = neumann_solve(op, f, dec, tol=1e-8, max_iter=cap)
        back = (apply_binomial(op, res.u) - f).norm() / f.norm()
        worst = max(worst, back)
        ok &= dec.branch == label and res.iterations <= cap
        detail.append(f"{label} {res.iterations} sweeps")
    return CheckResult("Neumann series residual", worst, 1e-8,
                       ok and worst <= 1e-8, ", ".join(detail))


def _gsg_error(p=2.0, probes=12):
    """Interval model of S: ``G S G^-1 = w^-1 S_I w`` at sample points."""
    g = make_grid(24, 4096)
    fn = bump(0.2, 0.8, 0.0, p)
    f = SampledFunction.from_function(g, fn)
    sf = op_S(f, p).values
    js = np.flatnonzero(np.abs(g.x) <= 3)[::max(1, 400 // probes)][:probes]
    nodes, weights = np.polynomial.legendre.leggauss(24)
    edges = np.linspace(0, 1, 401)
    s = (0.5 * (edges[1:, None] - edges[:-1, None]) * nodes
         + 0.5 * (edges[1:, None] + edges[:-1, None])).ravel()
    ws = (0.5 * (edges[1:, None] - edges[:-1, None]) * weights).ravel()

    def phi(y):
        return fn(np.log(y / (1 - y))) / (1 - y)
    ph = phi(s)
    worst = 0.0
    for j in js:
        y = 1.0 / (1.0 + np.exp(-g.x[j]))
        py = phi(np.array([y]))[0]
        pv = np.sum(ws * (ph - py) / (s - y)) + py * np.log((1 - y) / y)
        wy = (1 - y) ** (2 / p - 1)
        rhs = pv / (np.pi * 1j) / wy
        lhs = (1 - y) ** (-2 / p) * sf[j]
        worst = max(worst, abs(lhs - rhs) / np.max(np.abs(sf)))
    return float(worst)


def check_transplant(rng):
    g = make_grid(12, 4096)
    f = SampledFunction.from_function(g, bump(rng.uniform(-1, 1), 1.0))
    worst = 0.0
    for path in catalog_paths():
        spec = ProblemSpec.from_problem(read_problem(path))
        for op in (spec.plus, spec.minus):
            worst = max(worst, transplant_check(op, f).discrepancy)
    gsg = _gsg_error()
    worst_all = max(worst, gsg)
    return CheckResult("half-line to interval transplantation", worst_all,
                       1e-4, worst_all <= 1e-4,
                       f"shift term {worst:.2e}, Cauchy term {gsg:.2e}")


def check_catalog_concordance(rng):
    bad = []
    for path in catalog_paths():
        name = os.path.basename(path)[:-5]
        spec = ProblemSpec.from_problem(read_problem(path))
        v = fredholm_verdict(spec, oracle=True)
        cls = v.oracle_profile.classification
        expect_fail = name in DESIGNED_FAILURES
        if v.fredholm_sufficient and cls != "BOUNDED-BELOW":
            bad.append(f"{name}: sufficient but {cls}")
        if expect_fail and (v.fredholm_sufficient or cls != "DECAYING"):
            bad.append(f"{name}: expected failure, got {v.status}/{cls}")
        if not expect_fail and not v.fredholm_sufficient:
            bad.append(f"{name}: expected sufficient, got {v.status}")
    return CheckResult("verdict and finite-section oracle agree", len(bad), 0,
                       not bad, "; ".join(bad))


def compact_product_profile(L=64.0, sizes=(256, 512, 1024)):
    """``sigma_{ceil(n/4)}`` of ``a Co(r_2)`` with ``a = 1 / (1 + ln^2 t)``."""
    a = parse_expr("1/(1+ln(t)^2)")
    op = mult(a) @ R
    out = []
    for n in sizes:
        fs = finite_section(op, make_grid(L, n), 2.0)
        sv = linalg.svdvals(fs.matrix)
        out.append(float(sv[math.ceil(n / 4) - 1]))
    return out


def commutator_profile(coef="sin(llog(t))", schedule=range(2, 10), p=2.0):
    """``||(a S - S a) phi|| / ||phi||`` for a bump ``phi`` sitting at
    ``ln t = +-e**u``.  By dilation invariance of ``S`` the coefficient is
    translated instead of the bump."""
    e = parse_expr(coef)
    g = make_grid(12, 4096)
    f = SampledFunction.from_function(g, bump(0.0, 1.0, 0.0, p))
    out = {"zero": [], "inf": []}
    for u in schedule:
        for key, sign in (("zero", -1.0), ("inf", 1.0)):
            shift = sign * math.exp(u)
            aco = mult(lambda x, s=shift: e.eval_log(x + s))
            comm = (aco @ S - S @ aco)(f, p)
            out[key].append(comm.norm(p) / f.norm(p))
    return out


def check_compactness(rng):
    prof = compact_product_profile()
    noise = 1e-13
    halving = all(b <= a / 2 + noise for a, b in zip(prof, prof[1:]))
    comm = commutator_profile()
    final = max(comm["zero"][-1], comm["inf"][-1])
    c = parse_expr("sin(llog(t))")
    d0, dinf = endpoint_decay(c, Shift("0.5*sigm(ln(t))"))
    shift_gap = float(max(d0[-1], dinf[-1]))
    ok = halving and final <= 0.05 and shift_gap < 0.02
    return CheckResult("compactness surrogates", final, 0.05, ok,
                       "sigma " + ", ".join(f"{s:.2e}" for s in prof)
                       + f"; shift gap {shift_gap:.2e}")


def check_so_regression(rng):
    good = so_certify(parse_expr("sin(llog(t))")).passed
    bad = not so_certify(parse_expr("sin(ln(t))")).passed
    c = so_certify(parse_expr("3.5"))
    zero = max(c.osc_zero + c.osc_inf)
    ok = good and bad and zero == 0.0 and c.passed
    return CheckResult("slow-oscillation certification regression", zero, 0.0,
                       ok)


def check_shift_model(rng):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bad = validate_sos(Shift("-5*sigm(ln(t))"))
        good = validate_sos(Shift("-3*sigm(ln(t))"))
    sh = Shift("0.5*sigm(ln(t))")
    y = np.exp(rng.uniform(-20, 20, 64))
    trip = float(np.max(np.abs(inverse_shift(sh, y) * np.exp(
        sh.omega.eval_log(np.log(inverse_shift(sh, y)))) / y - 1)))
    ok = (not bad.passed) and good.passed and abs(bad.witness_log_t) < 0.05
    return CheckResult("shift validation and inverse round trip", trip, 1e-10,
                       ok and trip <= 1e-10)


def check_symbol_symmetry(rng):
    p = 2.0
    x = np.linspace(-6, 6, 2401)
    vals = rng.normal(size=8) + 1j * rng.normal(size=8)
    fp = FiberPoint(*vals[:4], LN2, 1.0)
    # reflection x -> -x exchanges the P_+ and P_- brackets
    cv = np.conj(vals[:4])
    fc = FiberPoint(cv[2], cv[3], cv[0], cv[1], LN2, 1.0)
    err = float(np.max(np.abs(np.abs(n_xi(fc, -x, p)) - np.abs(n_xi(fp, x, p)))))
    return CheckResult("conjugation symmetry of |n|", err, 1e-12, err <= 1e-12)


CHECKS = [
    check_symbol_identity,
    check_s_r_identity,
    check_quadrature,
    check_kernel_transform,
    check_pdo_realization,
    check_factorization,
    check_neumann,
    check_transplant,
    check_catalog_concordance,
    check_compactness,
    check_so_regression,
    check_shift_model,
    check_symbol_symmetry,
]


def run_suite(seed=0, checks=None):
    """Run the checks in order with a shared seeded generator."""
    rng = np.random.default_rng(seed)
    return [chk(rng) for chk in (checks or CHECKS)]


def format_suite(results, seed):
    lines = [f"validation suite, seed {seed}"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = (f"{status}  {r.name}: measured {r.measured:.6e} "
                f"threshold {r.threshold:.1e}")
        if r.detail:
            line += f" ({r.detail})"
        lines.append(line)
    failed = [r for r in results if not r.passed]
    lines.append(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
