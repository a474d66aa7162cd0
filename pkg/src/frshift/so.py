"""Slow-oscillation diagnostics and endpoint cluster sets.

A function ``e`` on ``(0, inf)`` is slowly oscillating at an endpoint when
its oscillation over ``[lam * r, r]`` tends to zero as ``r`` approaches
that endpoint.  The check here is numerical: oscillation is sampled along
the schedule ``r = exp(+-e**u)`` and must decrease monotonically to below a
tolerance.

Everything is evaluated through ``x = ln t``; callables passed in place of
an :class:`~frshift.expr.SoExpression` must accept an array of ``x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import ExprDomainError, SoExpression

__all__ = [
    "CERT_TOLERANCE",
    "DEFAULT_SCHEDULE",
    "CertificationError",
    "CertReport",
    "FiberPoint",
    "ClusterSet",
    "oscillation",
    "so_certify",
    "cluster_tuples",
]

CERT_TOLERANCE = 0.05
DEFAULT_SCHEDULE = tuple(float(u) for u in range(2, 10))
DENOMINATOR_FLOOR = 1e-12


class CertificationError(ValueError):
    """Raised when uncertified data reaches an operation that needs it."""


def _log_evaluator(e):
    if isinstance(e, SoExpression):
        return e.eval_log
    if callable(e):
        return e
    raise TypeError(f"cannot evaluate {e!r}")


def _max_pairwise(values):
    v = np.asarray(values)
    if not np.iscomplexobj(v):
        return float(np.max(v) - np.min(v))
    d = np.abs(v[:, None] - v[None, :])
    return float(np.max(d))


def oscillation(e, lam, r=None, *, log_r=None, samples=64):
    """Oscillation of ``e`` over ``[lam * r, r]``.

    Parameters
    ----------
    e : SoExpression or callable of ``x = ln t``
    lam : float
        Window ratio, ``0 < lam < 1``.
    r : float, optional
        Window right end.  Use ``log_r`` for windows beyond float range.
    log_r : float, optional
        ``ln r``.
    samples : int
        Log-uniform samples in the window.

    Returns
    -------
    float
        ``max |e(t1) - e(t2)|`` over the samples.
    """
    if not 0 < lam < 1:
        raise ValueError("lam must lie in (0, 1)")
    if log_r is None:
        if r is None or not r > 0:
            raise ValueError("need r > 0 or log_r")
        log_r = float(np.log(r))
    xs = np.linspace(log_r + np.log(lam), log_r, samples)
    return _max_pairwise(_log_evaluator(e)(xs))


@dataclass
class CertReport:
    """Outcome of :func:`so_certify`."""

    passed: bool
    tolerance: float
    schedule: tuple
    osc_zero: list
    osc_inf: list
    reason: str = ""
    min_denominator: float = np.inf

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        tail = f" ({self.reason})" if self.reason else ""
        return (f"{status} osc_0={self.osc_zero[-1]:.3g} "
                f"osc_inf={self.osc_inf[-1]:.3g}{tail}")


def _nonincreasing(seq, floor, slack=1e-12):
    # wiggles far below the tolerance are sampling noise, not growth
    seq = np.maximum(np.asarray(seq), floor)
    if not np.all(np.isfinite(seq)):
        return False
    return bool(np.all(np.diff(seq) <= slack))


def so_certify(e, lam=0.5, schedule=DEFAULT_SCHEDULE, tol=CERT_TOLERANCE,
               samples=64):
    """Numerically certify slow oscillation at both endpoints.

    The schedule ``u`` gives windows ending at ``r = exp(e**u)`` (towards
    infinity) and ``r = exp(-e**u)`` (towards zero).  Certification passes
    when the oscillation is non-increasing along the schedule at each end
    (values below ``tol / 10`` are clipped before comparing) and its final
    value is below ``tol``.  Denominators of ``e`` must stay
    away from zero on all sampled windows.
    """
    if len(schedule) < 4:
        raise ValueError("schedule needs at least four points")
    f = _log_evaluator(e)
    osc0, oscinf = [], []
    reasons = []
    for u in schedule:
        big = float(np.exp(u))
        for seq, lr in ((oscinf, big), (osc0, -big)):
            try:
                seq.append(oscillation(f, lam, log_r=lr, samples=samples))
            except ExprDomainError:
                seq.append(np.inf)
    if not np.all(np.isfinite(osc0 + oscinf)):
        reasons.append("non-finite values in the endpoint windows")
    min_den = np.inf
    if isinstance(e, SoExpression):
        xs = np.concatenate([np.linspace(-30, 30, 601)]
                            + [np.linspace(s * np.exp(u) + np.log(lam),
                                           s * np.exp(u), samples)
                               for u in schedule for s in (1, -1)])
        min_den = e.denominator_minimum(xs)
        if min_den < DENOMINATOR_FLOOR:
            reasons.append(f"denominator approaches zero (min {min_den:.3g})")
    for name, seq in (("zero", osc0), ("infinity", oscinf)):
        if not _nonincreasing(seq, 0.1 * tol):
            reasons.append(f"oscillation not decreasing towards {name}")
        if not seq[-1] < tol:
            reasons.append(f"oscillation {seq[-1]:.3g} >= {tol} towards {name}")
    return CertReport(not reasons, tol, tuple(schedule), osc0, oscinf,
                      "; ".join(reasons), min_den)


def certified(e, **kw):
    """Memoised :func:`so_certify` on an expression."""
    key = tuple(sorted(kw.items()))
    cache = e._cert
    if key not in cache:
        cache[key] = so_certify(e, **kw)
    return cache[key]


@dataclass(frozen=True)
class FiberPoint:
    """One cluster value of ``(a, b, c, d, omega, kappa)`` at an endpoint.

    ``kappa = 1 + t omega'(t)`` so the shift derivative at the point is
    ``kappa * exp(omega)``.
    """

    a: complex
    b: complex
    c: complex
    d: complex
    omega: float
    kappa: float
    endpoint: str = "inf"
    log_t: float = 0.0

    @property
    def alpha_prime(self):
        return self.kappa * np.exp(self.omega)


@dataclass
class ClusterSet:
    """Finite approximation of a cluster set at one endpoint."""

    endpoint: str
    points: list
    epsilon: float
    log_t: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    sizes: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)


def _zero(x):
    return np.zeros_like(x, dtype=float)


def sample_abscissae(endpoint, u_min=2.0, u_max=9.0, count=400):
    """Log coordinates ``x = +-e**u`` with ``u`` uniform in ``[u_min, u_max]``."""
    sign = {"inf": 1.0, "zero": -1.0}[endpoint]
    return sign * np.exp(np.linspace(u_min, u_max, count))


def cluster_tuples(a, b, c=None, d=None, omega=None, endpoint="inf", *,
                   u_min=2.0, u_max=9.0, samples=400, epsilon=1e-3,
                   require_certified=True):
    """Cluster the coefficient tuple along ``t -> endpoint``.

    Parameters
    ----------
    a, b, c, d : SoExpression
        Coefficients; ``c`` and ``d`` default to zero.
    omega : SoExpression
        Shift exponent, ``alpha(t) = t exp(omega(t))``.
    endpoint : {'zero', 'inf'}
    epsilon : float
        Clustering radius in the max norm over components.

    Returns
    -------
    ClusterSet
        Representatives are raw samples, so every returned fiber point is
        an attained value.
    """
    if endpoint not in ("zero", "inf"):
        raise ValueError("endpoint must be 'zero' or 'inf'")
    if omega is None:
        raise ValueError("omega is required")
    exprs = [a, b, c, d]
    if require_certified:
        for e in exprs + [omega]:
            if isinstance(e, SoExpression):
                rep = certified(e)
                if not rep.passed:
                    raise CertificationError(
                        f"{e.text!r} is not certified slowly oscillating: "
                        f"{rep.reason}")
    xs = sample_abscissae(endpoint, u_min, u_max, samples)
    cols = []
    for e in exprs:
        cols.append(_zero(xs) if e is None else _log_evaluator(e)(xs))
    try:
        w, dw = omega.eval_log_deriv(xs)
    except AttributeError:
        w = omega(xs)
        dw = np.gradient(w, xs)
    cols += [w, 1.0 + dw]
    table = np.column_stack([np.asarray(col, dtype=complex) for col in cols])
    if not np.all(np.isfinite(table)):
        raise ExprDomainError("non-finite coefficient values in the tail")
    reps = []
    sizes = []
    for k in range(len(xs)):
        row = table[k]
        if reps:
            dist = np.max(np.abs(table[reps] - row), axis=1)
            j = int(np.argmin(dist))
            if dist[j] <= epsilon:
                sizes[j] += 1
                continue
        reps.append(k)
        sizes.append(1)
    points = [FiberPoint(*(complex(v) for v in table[k, :4]),
                         float(table[k, 4].real), float(table[k, 5].real),
                         endpoint, float(xs[k]))
              for k in reps]
    return ClusterSet(endpoint, points, epsilon, xs, table, sizes)
