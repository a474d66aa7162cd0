"""Orientation-preserving shifts ``alpha(t) = t exp(omega(t))``.

In log coordinates the shift is ``x -> x + omega(x)``; it preserves
orientation exactly when ``kappa = 1 + t omega'(t) = 1 + d omega / dx``
stays positive.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .expr import SoExpression, parse_expr
from .so import CertReport, certified, so_certify

__all__ = [
    "ShiftValidationError",
    "BracketError",
    "Shift",
    "ShiftReport",
    "validate_sos",
    "alpha_of",
    "alpha_deriv",
    "inverse_shift",
    "endpoint_decay",
]


class ShiftValidationError(ValueError):
    """The shift is not a valid orientation-preserving diffeomorphism."""


class BracketError(ValueError):
    """Requested point lies outside the bracketed image of the shift."""


class Shift:
    """Shift defined by a slowly oscillating exponent ``omega``.

    Parameters
    ----------
    omega : SoExpression or str
    x_max : float
        Half-width of the validation grid in ``ln t``.
    nodes : int
        Validation grid size.
    margin : float
        Required lower bound for ``1 + t omega'(t)``.
    """

    def __init__(self, omega, x_max=25.0, nodes=2000, margin=1e-3,
                 assert_fixed_point_free=False):
        if isinstance(omega, str):
            omega = parse_expr(omega)
        if not isinstance(omega, SoExpression):
            raise TypeError("omega must be an expression")
        self.omega = omega
        self.x_max = float(x_max)
        self.nodes = int(nodes)
        self.margin = float(margin)
        self.assert_fixed_point_free = assert_fixed_point_free
        self.grid_x = np.linspace(-self.x_max, self.x_max, self.nodes)
        w, dw = omega.eval_log_deriv(self.grid_x)
        self._w = w
        self._kappa = 1.0 + dw
        self.omega_bound = float(np.max(np.abs(w)))

    def __repr__(self):
        return f"Shift({self.omega.text!r})"

    def log_alpha(self, x):
        """``ln alpha(e**x)``."""
        x = np.asarray(x, dtype=float)
        return x + self.omega.eval_log(x)

    def kappa(self, x):
        """``1 + t omega'(t)`` at ``t = e**x``."""
        _, dw = self.omega.eval_log_deriv(np.asarray(x, dtype=float))
        return 1.0 + dw

    @property
    def min_kappa(self):
        return float(np.min(self._kappa))

    @property
    def is_identity(self):
        return self.omega.is_constant() and self.omega.eval_log(0.0) == 0


@dataclass
class ShiftReport:
    """Result of :func:`validate_sos`."""

    passed: bool
    min_kappa: float
    witness_t: float
    witness_log_t: float
    omega_cert: CertReport
    derivative_cert: CertReport
    sign_changes: int
    reason: str = ""


def validate_sos(shift):
    """Check that ``shift`` is an orientation-preserving slowly oscillating
    shift on its validation grid.

    Fails when ``1 + t omega'`` drops below the margin (the witness is the
    offending minimiser), when ``omega`` or ``t omega'`` fail slow
    oscillation certification, or for the identity shift.  A sign change
    of ``omega`` (so fixed points may exist) only emits a warning.
    """
    om = shift.omega
    reasons = []
    if not om.is_real:
        reasons.append("omega must be real valued")
    k = int(np.argmin(shift._kappa))
    kmin = float(shift._kappa[k])
    if not kmin > shift.margin:
        reasons.append(
            f"1 + t omega'(t) = {kmin:.6g} <= {shift.margin} at t = "
            f"{np.exp(shift.grid_x[k]):.6g}")
    c1 = certified(om)
    c2 = so_certify(lambda x: om.eval_log_deriv(x)[1])
    if not c1.passed:
        reasons.append("omega not slowly oscillating: " + c1.reason)
    if not c2.passed:
        reasons.append("t omega'(t) not slowly oscillating: " + c2.reason)
    if shift.is_identity:
        reasons.append("identity shift is rejected")
    sgn = np.sign(shift._w)
    sgn = sgn[sgn != 0]
    changes = int(np.count_nonzero(np.diff(sgn)))
    if changes and not shift.assert_fixed_point_free:
        warnings.warn(f"omega changes sign {changes} time(s) on the "
                      "validation grid; the shift may have fixed points",
                      stacklevel=2)
    return ShiftReport(not reasons, kmin, float(np.exp(shift.grid_x[k])),
                       float(shift.grid_x[k]), c1, c2, changes,
                       "; ".join(reasons))


def alpha_of(shift, t):
    """``alpha(t) = t exp(omega(t))``."""
    t = np.asarray(t, dtype=float)
    x = np.log(t)
    return t * np.exp(shift.omega.eval_log(x))


def alpha_deriv(shift, t):
    """``alpha'(t) = (1 + t omega'(t)) exp(omega(t))``.

    Raises
    ------
    ShiftValidationError
        If the derivative is not positive at a query point.
    """
    t = np.asarray(t, dtype=float)
    w, dw = shift.omega.eval_log_deriv(np.log(t))
    out = (1.0 + dw) * np.exp(w)
    if np.any(~(out > 0)):
        raise ShiftValidationError("non-positive shift derivative")
    return out


def inverse_log(shift, y, bracket=None, tol=1e-12):
    """Solve ``x + omega(x) = y`` for ``x`` (vectorised).

    Bisection on ``bracket`` (defaults to the validation range) followed
    by Newton polishing.
    """
    y = np.asarray(y, dtype=float)
    if bracket is None:
        lo, hi = -shift.x_max, shift.x_max
    else:
        lo, hi = map(float, bracket)
    glo = lo + float(shift.omega.eval_log(lo))
    ghi = hi + float(shift.omega.eval_log(hi))
    if np.any(y < glo) or np.any(y > ghi):
        raise BracketError(
            f"point outside the shift image [{glo:.6g}, {ghi:.6g}] of the "
            "bracket; widen the range")
    a = np.full(y.shape, lo)
    b = np.full(y.shape, hi)
    iters = int(np.ceil(np.log2(max(hi - lo, 1.0) / 1e-9))) + 1
    for _ in range(iters):
        m = 0.5 * (a + b)
        below = shift.log_alpha(m) < y
        a = np.where(below, m, a)
        b = np.where(below, b, m)
    x = 0.5 * (a + b)
    for _ in range(4):
        w, dw = shift.omega.eval_log_deriv(x)
        step = (x + w - y) / (1.0 + dw)
        x = x - step
        if np.max(np.abs(step), initial=0.0) < tol:
            break
    return x


def inverse_shift(shift, y, tol=1e-12):
    """``beta(y)``, the inverse shift, by bracketed root finding."""
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)):
        raise ValueError("y must be positive")
    return np.exp(inverse_log(shift, np.log(y), tol=tol))


def endpoint_decay(c, shift, schedule=tuple(range(2, 10))):
    """``|c(t) - c(alpha(t))|`` along ``t = exp(+-e**u)``.

    Returns ``(towards_zero, towards_inf)`` arrays.
    """
    out = []
    for sign in (-1.0, 1.0):
        x = sign * np.exp(np.asarray(schedule, dtype=float))
        out.append(np.abs(c.eval_log(x) - c.eval_log(shift.log_alpha(x))))
    return out[0], out[1]
