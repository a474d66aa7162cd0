"""Sufficient Fredholm conditions for
``N = (a I - b W_alpha) P_+ + (c I - d W_alpha) P_-``.

The verdict combines

(i)  invertibility of ``A_+ = a I - b W`` and ``A_- = c I - d W``
     (see :mod:`frshift.functional`), and
(ii) non-vanishing of the local symbol

     n_xi(x) = [a - b e] (1 + coth z) / 2 + [c - d e] (1 - coth z) / 2,

     ``z = pi (x + i/p)``, ``e = exp(i omega (x + i/p))``, over the
     endpoint fibers ``xi`` and all real ``x``.

Condition (ii) is sampled on ``[-X, X]``; beyond ``X`` an analytic lower
bound (the tail certificate) takes over.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import SoExpression, parse_expr
from .functional import BinomialOperator, check_fo_conditions
from .mellin import make_grid, mult_s_p
from .operators import (I, P_minus, P_plus, finite_section, mult, shift_op,
                        smallest_singular)
from .problem import DEFAULTS, ProblemFile
from .shift import Shift, inverse_log
from .so import cluster_tuples

__all__ = [
    "ProblemSpec",
    "SymbolSurface",
    "Verdict",
    "n_xi",
    "tail_certificate",
    "condition_ii",
    "fredholm_verdict",
    "oracle_operator",
    "oracle_profile",
]


@dataclass
class ProblemSpec:
    """Data ``(a, b, c, d, omega, p)`` plus the configuration table."""

    a: SoExpression
    b: SoExpression
    c: SoExpression
    d: SoExpression
    shift: Shift
    p: float = 2.0
    config: dict = field(default_factory=lambda: dict(DEFAULTS))

    def __post_init__(self):
        for name in "abcd":
            v = getattr(self, name)
            if isinstance(v, str):
                setattr(self, name, parse_expr(v))
        if not isinstance(self.shift, Shift):
            self.shift = Shift(self.shift)
        if not self.p > 1:
            raise ValueError("p must satisfy 1 < p")
        self.config = {**DEFAULTS, **self.config, "p": self.p}

    @classmethod
    def from_problem(cls, prob: ProblemFile):
        cfg = prob.config
        return cls(*(prob.expression(k) for k in "abcd"),
                   Shift(prob.expression("omega")), cfg["p"], dict(cfg))

    @property
    def plus(self):
        return BinomialOperator(self.a, self.b, self.shift, self.p)

    @property
    def minus(self):
        return BinomialOperator(self.c, self.d, self.shift, self.p)


def n_xi(xi, x, p):
    """Local symbol ``n_xi(x)`` at fiber point ``xi`` (vectorised in x)."""
    x = np.asarray(x, dtype=float)
    s = mult_s_p(p, x)
    e = np.exp(1j * xi.omega * (x + 1j / p))
    return ((xi.a - xi.b * e) * (1 + s) / 2
            + (xi.c - xi.d * e) * (1 - s) / 2)


def tail_certificate(xi, X, p):
    """Lower bound on ``|n_xi(x)|`` for ``|x| > X``.

    For ``x > X``, ``n = (a - b e) + [(a - b e) - (c - d e)] (s - 1) / 2``
    with ``|s - 1| <= delta = 2 e^{-2 pi X} / (1 - e^{-2 pi X})`` and
    ``|e| = E = e^{-omega/p}``.  Since the phase of ``e`` sweeps a full
    circle, the leading bracket is bounded below by ``||a| - |b| E|``
    (exactly ``|a - b|`` when ``omega = 0``).  The ``x < -X`` tail is
    symmetric with ``(c, d)``.  Non-positive values certify nothing.
    """
    if not X > 0:
        raise ValueError("X must be positive")
    q = np.exp(-2 * np.pi * X)
    delta = 2 * q / (1 - q)
    E = np.exp(-xi.omega / p)
    spread = abs(xi.a) + abs(xi.b) * E + abs(xi.c) + abs(xi.d) * E
    if xi.omega == 0:
        lead_p, lead_m = abs(xi.a - xi.b), abs(xi.c - xi.d)
    else:
        lead_p = abs(abs(xi.a) - abs(xi.b) * E)
        lead_m = abs(abs(xi.c) - abs(xi.d) * E)
    return float(min(lead_p, lead_m) - 0.5 * delta * spread)


@dataclass
class SymbolSurface:
    """Samples of ``n_xi(x)`` over fibers x grid."""

    fibers: list
    x: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    minima: np.ndarray = field(repr=False)

    def rows(self):
        """``(fiber_id, x, n)`` triples in row-major order."""
        for i in range(len(self.fibers)):
            for j, xv in enumerate(self.x):
                yield i, xv, self.values[i, j]


def condition_ii(spec, clusters0, clusters_inf, x_grid):
    """Evaluate ``n_xi`` over all fibers and ``x_grid``.

    Returns
    -------
    surface : SymbolSurface
    summary : dict
        ``min_abs_n``, ``witness`` (fiber point, x), ``tail_cert`` (min
        over fibers) and cluster cardinalities.
    """
    fibers = list(clusters0.points) + list(clusters_inf.points)
    if not fibers:
        raise ValueError("empty cluster set")
    x = np.asarray(x_grid, dtype=float)
    vals = np.array([n_xi(fp, x, spec.p) for fp in fibers])
    mods = np.abs(vals)
    minima = mods.min(axis=1)
    i = int(np.argmin(minima))
    j = int(np.argmin(mods[i]))
    X = float(max(abs(x[0]), abs(x[-1])))
    tails = [tail_certificate(fp, X, spec.p) for fp in fibers]
    k = int(np.argmin(tails))
    summary = {
        "min_abs_n": float(minima[i]),
        "witness": (fibers[i], float(x[j])),
        "tail_cert": float(tails[k]),
        "tail_witness": fibers[k],
        "fibers_zero": len(clusters0),
        "fibers_inf": len(clusters_inf),
        "epsilon": clusters0.epsilon,
        "X": X,
    }
    return SymbolSurface(fibers, x, vals, minima), summary


@dataclass
class Verdict:
    """Sufficiency verdict for the Fredholm property of ``N``."""

    cond_i_plus: object
    cond_i_minus: object
    cond_ii_min_modulus: float
    cond_ii_witness: tuple
    tail_certificate: float
    fredholm_sufficient: bool
    status: str
    margin: float
    summary: dict = field(default_factory=dict, repr=False)
    surface: SymbolSurface = field(default=None, repr=False)
    oracle_profile: object = None
    oracle_label: str = ""

    def key_values(self):
        """Stable machine-readable fields."""
        return {
            "branch_plus": self.cond_i_plus.branch,
            "branch_minus": self.cond_i_minus.branch,
            "min_abs_n": self.cond_ii_min_modulus,
            "tail_cert": self.tail_certificate,
            "sufficient": str(self.fredholm_sufficient).lower(),
        }


def fredholm_verdict(spec, oracle=False):
    """Run both invertibility checks and condition (ii).

    The verdict is sufficient exactly when both branches exist and
    ``min(min |n|, tail certificate)`` exceeds ``margin.fredholm``.
    ``status`` is one of ``SUFFICIENT``, ``NOT-SUFFICIENT``,
    ``INCONCLUSIVE-TAIL`` (grid passes but the tail bound does not) and
    ``UNDECIDED`` (a branch margin sits within slack of zero).
    """
    cfg = spec.config
    margin = cfg["margin.fredholm"]
    eps = cfg["cluster.epsilon"]
    plus = check_fo_conditions(spec.plus, epsilon=eps)
    minus = check_fo_conditions(spec.minus, epsilon=eps)
    om = spec.shift.omega
    cl = {e: cluster_tuples(spec.a, spec.b, spec.c, spec.d, om, e, epsilon=eps)
          for e in ("zero", "inf")}
    xg = np.linspace(-cfg["x.max"], cfg["x.max"], cfg["x.nodes"])
    surface, summary = condition_ii(spec, cl["zero"], cl["inf"], xg)
    mn, tail = summary["min_abs_n"], summary["tail_cert"]
    branches_ok = plus.branch != "NONE" and minus.branch != "NONE"
    sufficient = branches_ok and min(mn, tail) > margin
    if sufficient:
        status = "SUFFICIENT"
    elif not branches_ok and "UNDECIDED-NEAR-BOUNDARY" in (plus.status, minus.status):
        status = "UNDECIDED"
    elif branches_ok and mn > margin:
        status = "INCONCLUSIVE-TAIL"
    else:
        status = "NOT-SUFFICIENT"
    verdict = Verdict(plus, minus, mn, summary["witness"], tail, sufficient,
                      status, margin, summary, surface)
    if oracle:
        verdict.oracle_profile, verdict.oracle_label = oracle_profile(
            spec, plus.branch, minus.branch)
    return verdict


def _composed_with_beta(coef, shift, grid):
    bound = 2.0 * float(np.max(np.abs(shift.omega.eval_log(grid.x)))) + 1.0
    bracket = (grid.x[0] - bound, grid.x[-1] + bound)

    def values(x):
        return coef.eval_log(inverse_log(shift, x, bracket=bracket))
    return values


def oracle_operator(spec, grid, branch_plus="FO1", branch_minus="FO1"):
    """Operator handed to the finite-section oracle.

    When both binomial parts are shift-dominated the oracle uses
    ``N' = ((a o beta) W^-1 - (b o beta)) P_+ + ((c o beta) W^-1 -
    (d o beta)) P_-``, which satisfies ``N = W N'``.  The raw sections
    of ``N`` are then dominated by the shift and lose the finite-section
    property even though ``N`` itself is Fredholm.
    """
    W = shift_op(spec.shift)
    if branch_plus == "FO2" and branch_minus == "FO2":
        Wi = shift_op(spec.shift, inverse=True)
        comp = {k: mult(_composed_with_beta(getattr(spec, k), spec.shift, grid))
                for k in "abcd"}
        op = ((comp["a"] @ Wi - comp["b"]) @ P_plus
              + (comp["c"] @ Wi - comp["d"]) @ P_minus)
        return op, "shift-factored"
    op = ((mult(spec.a) - mult(spec.b) @ W) @ P_plus
          + (mult(spec.c) - mult(spec.d) @ W) @ P_minus)
    return op, "direct"


def oracle_profile(spec, branch_plus="FO1", branch_minus="FO1", sizes=None):
    """Finite-section decay profile of ``N`` (or its factored form)."""
    cfg = spec.config
    grid = make_grid(cfg["oracle.L"], cfg["oracle.n"])
    op, label = oracle_operator(spec, grid, branch_plus, branch_minus)
    fs = finite_section(op, grid, spec.p, label=label)
    n = grid.n
    if sizes is None:
        sizes = [n // 8, n // 4, n // 2, n]
    return smallest_singular(fs, sizes), label
