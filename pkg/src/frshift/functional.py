"""Binomial functional operators ``A = a I - b W_alpha`` on ``L^p(R+)``.

:func:`check_fo_conditions` decides which of the two one-sided
invertibility regimes applies:

* ``FO1``: ``a`` is invertible and ``|a| > |b| / alpha'**(1/p)`` at both
  endpoints; then ``A^{-1} = sum_n (a^{-1} b W)^n a^{-1}``.
* ``FO2``: ``b`` is invertible and ``|a| < |b| / alpha'**(1/p)`` at both
  endpoints; then ``A^{-1} = -W^{-1} sum_n (b^{-1} a W^{-1})^n b^{-1}``.

The endpoint inequalities are evaluated on cluster sets.  Because those
are finite samples, margins are cross-checked against an independent
tail scan before a branch is chosen.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import expit, logit

from .expr import SoExpression, parse_expr
from .mellin import SampledFunction
from .operators import op_W
from .shift import Shift, validate_sos
from .so import CertificationError, ClusterSet, certified, cluster_tuples

__all__ = [
    "BinomialOperator",
    "InvertibilityDecision",
    "SolveResult",
    "NonConvergenceError",
    "SamplingError",
    "ResolutionError",
    "TransplantReport",
    "check_fo_conditions",
    "neumann_solve",
    "apply_binomial",
    "transplant_check",
]

SLACK = 1e-6
AGREEMENT = 1e-2


class NonConvergenceError(RuntimeError):
    """Neumann iteration did not reach the tolerance; ``result`` holds the
    last iterate."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


class SamplingError(RuntimeError):
    """Cluster-set margins disagree with the independent tail scan."""


class ResolutionError(RuntimeError):
    """Sample spacing too coarse for the requested comparison."""


def _expr(e):
    return parse_expr(e) if isinstance(e, str) else e


@dataclass
class BinomialOperator:
    """``A = a I - b W_alpha``.

    ``a`` and ``b`` are expressions (strings are parsed); ``shift`` is a
    :class:`~frshift.shift.Shift` or the text of ``omega``.
    """

    a: SoExpression
    b: SoExpression
    shift: Shift
    p: float = 2.0

    def __post_init__(self):
        self.a = _expr(self.a)
        self.b = _expr(self.b)
        if not isinstance(self.shift, Shift):
            self.shift = Shift(self.shift)
        if not self.p > 1:
            raise ValueError("p must exceed 1")


@dataclass
class InvertibilityDecision:
    """Outcome of :func:`check_fo_conditions`."""

    branch: str
    status: str
    inf_abs_a: float
    inf_abs_b: float
    limits: dict
    witnesses: dict
    tail_scan: dict
    predicted_ratio: float = np.nan
    notes: list = field(default_factory=list)


def _margin(a, b, kappa, omega, p):
    return np.abs(a) - np.abs(b) * (kappa * np.exp(omega)) ** (-1.0 / p)


def _tail_margins(op, endpoint, u_min, u_max, count=2000):
    sign = 1.0 if endpoint == "inf" else -1.0
    x = sign * np.linspace(np.exp(u_min), np.exp(u_max), count)
    w, dw = op.shift.omega.eval_log_deriv(x)
    q = _margin(op.a.eval_log(x), op.b.eval_log(x), 1.0 + dw, w, op.p)
    return float(q.min()), float(q.max())


def check_fo_conditions(op, clusters0=None, clusters_inf=None, *,
                        slack=SLACK, u_min=2.0, u_max=9.0, epsilon=1e-3,
                        agreement=AGREEMENT):
    """Decide the invertibility branch of ``a I - b W_alpha``.

    Returns
    -------
    InvertibilityDecision
        ``branch`` is ``'FO1'``, ``'FO2'`` or ``'NONE'``; ``status`` is
        ``'DECIDED'`` or ``'UNDECIDED-NEAR-BOUNDARY'`` when a margin falls
        within ``slack`` of zero.

    Raises
    ------
    CertificationError
        If a coefficient or the shift is not certified.
    SamplingError
        If the cluster-set margins and a dense tail scan disagree by more
        than ``agreement``.
    """
    for e in (op.a, op.b):
        rep = certified(e)
        if not rep.passed:
            raise CertificationError(f"{e.text!r} not certified: {rep.reason}")
    srep = validate_sos(op.shift)
    if not srep.passed:
        raise CertificationError(f"shift not valid: {srep.reason}")
    om = op.shift.omega
    kw = dict(u_min=u_min, u_max=u_max, epsilon=epsilon)
    if clusters0 is None:
        clusters0 = cluster_tuples(op.a, op.b, omega=om, endpoint="zero", **kw)
    if clusters_inf is None:
        clusters_inf = cluster_tuples(op.a, op.b, omega=om, endpoint="inf", **kw)

    xg = op.shift.grid_x
    xs = np.concatenate([xg, clusters0.log_t, clusters_inf.log_t])
    abs_a = np.abs(op.a.eval_log(xs))
    abs_b = np.abs(op.b.eval_log(xs))
    ia, ib = int(np.argmin(abs_a)), int(np.argmin(abs_b))
    witnesses = {"inf_abs_a_log_t": float(xs[ia]),
                 "inf_abs_b_log_t": float(xs[ib])}
    limits = {}
    scans = {}
    for cs in (clusters0, clusters_inf):
        q = np.array([_margin(fp.a, fp.b, fp.kappa, fp.omega, op.p)
                      for fp in cs.points])
        lo, hi = int(np.argmin(q)), int(np.argmax(q))
        limits[cs.endpoint] = (float(q[lo]), float(q[hi]))
        witnesses[f"liminf_{cs.endpoint}_log_t"] = cs.points[lo].log_t
        witnesses[f"limsup_{cs.endpoint}_log_t"] = cs.points[hi].log_t
        smin, smax = _tail_margins(op, cs.endpoint, u_min, u_max)
        scans[cs.endpoint] = (smin, smax)
        if (abs(smin - q[lo]) > agreement or abs(smax - q[hi]) > agreement):
            raise SamplingError(
                f"cluster margins [{q[lo]:.4g}, {q[hi]:.4g}] at "
                f"{cs.endpoint} disagree with the tail scan "
                f"[{smin:.4g}, {smax:.4g}]; refine the cluster sampling")

    inf_a, inf_b = float(abs_a[ia]), float(abs_b[ib])
    liminf = min(limits["zero"][0], limits["inf"][0])
    limsup = max(limits["zero"][1], limits["inf"][1])
    status = "DECIDED"
    if inf_a > slack and liminf > slack:
        branch = "FO1"
    elif inf_b > slack and limsup < -slack:
        branch = "FO2"
    else:
        branch = "NONE"
        if abs(liminf) <= slack or abs(limsup) <= slack:
            status = "UNDECIDED-NEAR-BOUNDARY"
    ratio = _predicted_ratio(op, branch, xs)
    return InvertibilityDecision(branch, status, inf_a, inf_b, limits,
                                 witnesses, scans, ratio)


def _predicted_ratio(op, branch, xs):
    """Sup of the pointwise contraction factor of the Neumann term."""
    if branch == "NONE":
        return np.nan
    w, dw = op.shift.omega.eval_log_deriv(xs)
    jac = ((1.0 + dw) * np.exp(w)) ** (-1.0 / op.p)
    a = np.abs(op.a.eval_log(xs))
    b = np.abs(op.b.eval_log(xs))
    if branch == "FO1":
        return float(np.max(b / a * jac))
    ys = op.shift.log_alpha(xs)
    a_y = np.abs(op.a.eval_log(ys))
    b_y = np.abs(op.b.eval_log(ys))
    return float(np.max(a_y / b_y * jac ** -1))


@dataclass
class SolveResult:
    """Neumann solution with its convergence history."""

    u: SampledFunction
    iterations: int
    residual: float
    history: list = field(default_factory=list)
    branch: str = ""


def apply_binomial(op, u):
    """``(a I - b W_alpha) u`` on samples."""
    x = u.grid.x
    a = op.a.eval_log(x)
    b = op.b.eval_log(x)
    return SampledFunction(u.grid, a * u.values - b * op_W(op.shift, u).values)


def neumann_solve(op, f, decision, tol=1e-8, max_iter=200):
    """Solve ``(a I - b W_alpha) u = f`` by the branch's Neumann series.

    The residual ``||A u - f||_p / ||f||_p`` is recomputed every sweep.

    Raises
    ------
    ValueError
        If ``decision.branch`` is ``'NONE'``.
    NonConvergenceError
        After ``max_iter`` sweeps without reaching ``tol``.
    """
    branch = decision.branch
    if branch not in ("FO1", "FO2"):
        raise ValueError("no invertibility branch: the operator is not "
                         "covered by either Neumann series")
    p = op.p
    grid = f.grid
    x = grid.x
    a = op.a.eval_log(x)
    b = op.b.eval_log(x)
    fnorm = f.norm(p)
    if fnorm == 0:
        return SolveResult(f._new(np.zeros_like(f.values)), 0, 0.0, [], branch)
    history = []

    def residual(u):
        return (apply_binomial(op, u) - f).norm(p) / fnorm

    if branch == "FO1":
        u = f._new(f.values / a)
        for k in range(1, max_iter + 1):
            u = f._new((f.values + b * op_W(op.shift, u).values) / a)
            res = residual(u)
            history.append(res)
            if res <= tol:
                return SolveResult(u, k, res, history, branch)
    else:
        v = f._new(f.values / b)
        for k in range(1, max_iter + 1):
            v = f._new((f.values + a * op_W(op.shift, v, inverse=True).values) / b)
            u = -op_W(op.shift, v, inverse=True)
            res = residual(u)
            history.append(res)
            if res <= tol:
                return SolveResult(u, k, res, history, branch)
    result = SolveResult(u, max_iter, history[-1], history, branch)
    raise NonConvergenceError(
        f"no convergence after {max_iter} sweeps (residual {history[-1]:.3g})",
        result)


@dataclass
class TransplantReport:
    """Comparison of the interval model against the half-line operator."""

    discrepancy: float
    max_spacing: float
    points: int


def transplant_check(op, f, n_y=32768, threshold=1e-10, max_spacing=0.25):
    """Check the half-line to interval transplantation at sample level.

    With ``eta(y) = y / (1 - y)`` and ``(G phi)(y) = (1 - y)**(-2/p)
    phi(eta(y))`` the shifted term must satisfy ``G b W_alpha phi =
    b(eta) c_{alpha,p} (G phi)(alpha~)`` where ``alpha~ = eta^{-1} alpha
    eta`` and ``c_{alpha,p} = ((1 - alpha~) / (1 - y))**(2/p)``.  The left
    side is formed from the half-line samples, the right side by
    interpolating ``G phi`` on a uniform ``y`` grid.

    Returns the relative max discrepancy over ``y`` nodes whose image lies
    in the sampled range.

    Raises
    ------
    ResolutionError
        If the ``ln t`` spacing implied by the ``y`` grid exceeds
        ``max_spacing`` where ``G phi`` is non-negligible.
    """
    p = op.p
    grid = f.grid
    y = np.arange(1, n_y + 1) / (n_y + 1.0)
    xy = logit(y)
    spline = CubicSpline(grid.x, f.values)

    def sample(q):
        out = spline(q)
        out[(q < grid.x[0]) | (q > grid.x[-1])] = 0
        return out

    scale = (1.0 - y) ** (-2.0 / p)
    Gf = scale * sample(xy)
    big = np.abs(Gf) > threshold * np.max(np.abs(Gf))
    dx = np.gradient(xy)
    spacing = float(np.max(dx[big])) if np.any(big) else 0.0
    if spacing > max_spacing:
        raise ResolutionError(f"ln t spacing {spacing:.3g} exceeds {max_spacing}")

    a = op.a.eval_log(xy)
    b = op.b.eval_log(xy)
    xa = op.shift.log_alpha(xy)
    ya = expit(xa)
    c_ap = ((1.0 - ya) / (1.0 - y)) ** (2.0 / p)
    Gf_at = CubicSpline(y, Gf)(ya)
    Gf_at[(ya < y[0]) | (ya > y[-1])] = 0
    lhs = a * Gf - b * c_ap * Gf_at
    rhs = scale * (a * sample(xy) - b * sample(xa))
    inside = (xy >= grid.x[0]) & (xy <= grid.x[-1])
    denom = np.max(np.abs(rhs[inside])) or 1.0
    disc = float(np.max(np.abs(lhs - rhs)[inside]) / denom)
    return TransplantReport(disc, spacing, int(inside.sum()))
