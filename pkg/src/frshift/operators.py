"""Operators on ``L^p(R+, dt)`` and their discretisations.

Primitives act on :class:`~frshift.mellin.SampledFunction` samples of
``f``.  Internally everything runs in ``Phi`` coordinates
(``g = t**(1/p) f``) where ``S`` and ``R`` are Fourier multipliers in
``x = ln t``.

Composite operators are built from :class:`Operator` nodes::

    N = (a * I - b * W) @ P_plus + (c * I - d * W) @ P_minus

and assembled into finite-section matrices acting on ``Phi``-weighted
nodal values.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.interpolate import CubicSpline

from .expr import SoExpression
from .mellin import (LogGrid, MellinMultiplier, PdoSymbol, SampledFunction,
                     apply_convolution, apply_pdo, mult_r_p_beta, mult_s_p,
                     phi_inv, phi_map)
from .shift import inverse_log

__all__ = [
    "ProbeError",
    "op_S",
    "op_R",
    "op_R_beta",
    "op_W",
    "op_S_quadrature",
    "op_R_quadrature",
    "kernel_transform",
    "symbol_c",
    "symbol_a",
    "symbol_a_at",
    "b_xi_eval",
    "Operator",
    "I",
    "S",
    "R",
    "P_plus",
    "P_minus",
    "mult",
    "shift_op",
    "convolution",
    "pdo",
    "FiniteSection",
    "DecayProfile",
    "finite_section",
    "smallest_singular",
    "classify_profile",
    "write_fsec",
    "read_fsec",
]


class ProbeError(ValueError):
    """Quadrature probe too close to the grid boundary."""


# --------------------------------------------------------------------------
# primitives on samples of f

def _convolve(f, mult, p):
    g = phi_map(f, p)
    return phi_inv(apply_convolution(mult, g), p)


def op_S(f, p):
    """Cauchy singular integral on ``R+`` via its Mellin multiplier."""
    return _convolve(f, MellinMultiplier.s_p(f.grid, p), p)


def op_R_beta(f, p, beta):
    """Mellin convolution with multiplier ``r_{p, beta}``."""
    return _convolve(f, MellinMultiplier.r_p_beta(f.grid, p, beta), p)


def op_R(f, p):
    """Hankel-type operator ``R = R_pi``."""
    return op_R_beta(f, p, np.pi)


def _interp(x, values, q):
    """Cubic spline of ``values`` (axis 0) at ``q``; zero outside the grid."""
    spline = CubicSpline(x, values, axis=0)
    out = spline(q)
    outside = (q < x[0]) | (q > x[-1])
    if np.any(outside):
        out[outside] = 0
    return out


def _shift_targets(shift, grid, inverse):
    x = grid.x
    if not inverse:
        return shift.log_alpha(x)
    bound = 2.0 * float(np.max(np.abs(shift.omega.eval_log(x)))) + 1.0
    return inverse_log(shift, x, bracket=(x[0] - bound, x[-1] + bound))


def op_W(shift, f, inverse=False):
    """``(W f)(t) = f(alpha(t))``, or ``f(beta(t))`` when ``inverse``.

    Off-grid values come from a cubic spline in ``ln t``; points mapped
    outside the grid read zero.
    """
    q = _shift_targets(shift, f.grid, inverse)
    return SampledFunction(f.grid, _interp(f.grid.x, f.values, q))


def _node(f, j, stride):
    n = f.grid.n
    j = int(j)
    reach = min(j, n - 1 - j) // stride
    if reach < 4:
        raise ProbeError(f"probe node {j} is too close to the grid boundary")
    return j, reach


def op_S_quadrature(f, j, stride=1):
    """``(S f)(t_j)`` by direct principal-value quadrature.

    In ``y = ln tau`` the kernel ``d tau / (tau - t)`` becomes
    ``dy / (1 - exp(x - y))``, which splits into ``1/2`` plus an odd
    ``coth`` part; the odd part is integrated symmetrically so the
    singularity cancels.  ``stride`` coarsens the rule (``stride = 2``
    halves the resolution).
    """
    grid = f.grid
    j, reach = _node(f, j, stride)
    F = np.asarray(f.values)
    H = grid.h * stride
    m = np.arange(1, reach + 1)
    u = m * H
    odd = (F[j + m * stride] - F[j - m * stride]) / np.tanh(u / 2)
    dF = (F[j + stride] - F[j - stride]) / (2 * H)
    odd_int = H * (odd.sum() - 0.5 * odd[-1]) + 0.5 * H * 4 * dF
    even_int = grid.h * F.sum()
    return (0.5 * even_int + 0.5 * odd_int) / (np.pi * 1j)


def op_R_quadrature(f, j, beta=np.pi):
    """``(R_beta f)(t_j)`` by trapezoid quadrature of the smooth kernel
    ``1 / (pi i (tau - e^{i beta} t))``."""
    grid = f.grid
    j = int(j)
    if not 0 <= j < grid.n:
        raise ProbeError("probe outside the grid")
    F = np.asarray(f.values)
    kern = 1.0 / (1.0 - np.exp(1j * beta) * np.exp(grid.x[j] - grid.x))
    return grid.h * np.sum(F * kern) / (np.pi * 1j)


def kernel_transform(k, y, p, span=80.0, step=0.005):
    """Mellin transform of the kernel of ``Phi W R Phi^-1`` for ``alpha = k t``.

    ``(1 / pi i) int_0^inf s**(1/p - 1 - i y) / (1 + k s) ds`` by the
    trapezoid rule after ``s = e**v``; the integrand decays exponentially
    at both ends, so the rule converges geometrically.
    """
    v = np.arange(-span, span + step / 2, step)
    with np.errstate(over="ignore"):
        integrand = np.exp(v * (1.0 / p - 1j * y)) / (1.0 + k * np.exp(v))
    return step * np.sum(integrand) / (np.pi * 1j)


# --------------------------------------------------------------------------
# symbols of shifted operators

def symbol_c(shift, p):
    """Symbol ``exp(i omega(t) (xi + i/p)) r_p(xi)`` of ``Phi W R Phi^-1``."""
    def ev(x, xi):
        w = shift.omega.eval_log(np.asarray(x, dtype=float))
        return np.exp(1j * w * (xi + 1j / p)) * mult_r_p_beta(p, np.pi, xi)
    return PdoSymbol(ev, "c", {"p": p, "omega": shift.omega.text})


def symbol_a(shift, p):
    """Symbol of ``Phi W R^2 Phi^-1``: ``c(t, xi) r_p(xi)``."""
    c = symbol_c(shift, p)

    def ev(x, xi):
        return c(x, xi) * mult_r_p_beta(p, np.pi, xi)
    return PdoSymbol(ev, "a", {"p": p, "omega": shift.omega.text})


def symbol_a_at(omega_value, p, x):
    """``a(t, x)`` at a point where ``omega(t) = omega_value``."""
    r = mult_r_p_beta(p, np.pi, x)
    return np.exp(1j * omega_value * (x + 1j / p)) * r * r


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_GL_Y = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


def b_xi_eval(xi, shift, p, t, x):
    """Factor ``b_xi`` with ``a(t, x) - a(xi, x) = (w(t) - w(xi)) r_p(x) b_xi(t, x)``.

    Parameters
    ----------
    xi : FiberPoint or float
        Fiber point (its ``omega``) or the value ``omega(xi)`` itself.
    t, x : array_like
        Broadcast together; ``t`` is the space variable, ``x`` the dual one.
    """
    w_xi = float(getattr(xi, "omega", xi))
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    w_t = shift.omega.eval_log(np.log(t))
    z = x + 1j / p
    dw = w_t - w_xi
    y = _GL_Y.reshape((-1,) + (1,) * np.broadcast(w_t, z).ndim)
    integrand = np.exp(1j * (w_xi + y * dw) * z)
    integral = np.tensordot(_GL_W, integrand, axes=(0, 0))
    return mult_r_p_beta(p, np.pi, x) * 1j * z * integral


# --------------------------------------------------------------------------
# operator expressions (acting in Phi coordinates)

def _coef_values(coef, grid):
    if isinstance(coef, SoExpression):
        return np.asarray(coef.eval_log(grid.x), dtype=complex)
    if callable(coef):
        return np.asarray(coef(grid.x), dtype=complex)
    return np.full(grid.n, complex(coef))


class Operator:
    """Linear operator node; ``apply`` works on ``Phi``-space columns."""

    def apply(self, g, grid, p):
        raise NotImplementedError

    def __call__(self, f, p):
        """Apply to samples of ``f`` in the original space."""
        g = phi_map(f, p)
        return phi_inv(SampledFunction(f.grid, self.apply(g.values, f.grid, p)), p)

    def __add__(self, other):
        return _Sum([(1.0, self), (1.0, _lift(other))])

    def __radd__(self, other):
        return _lift(other) + self

    def __sub__(self, other):
        return _Sum([(1.0, self), (-1.0, _lift(other))])

    def __rsub__(self, other):
        return _lift(other) - self

    def __neg__(self):
        return _Sum([(-1.0, self)])

    def __mul__(self, other):
        if isinstance(other, Operator):
            return _Compose(self, other)
        return _Sum([(complex(other), self)])

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return _Sum([(complex(other), self)])
        return _Compose(mult(other), self)

    def __matmul__(self, other):
        return _Compose(self, _lift(other))


def _lift(obj):
    if isinstance(obj, Operator):
        return obj
    if isinstance(obj, (int, float, complex, np.number)):
        return _Sum([(complex(obj), I)])
    raise TypeError(f"cannot use {obj!r} as an operator")


class _Identity(Operator):
    def apply(self, g, grid, p):
        return np.array(g, dtype=complex)

    def __repr__(self):
        return "I"


class _Multiply(Operator):
    def __init__(self, coef):
        self.coef = coef

    def apply(self, g, grid, p):
        v = _coef_values(self.coef, grid)
        return (v[:, None] if np.ndim(g) > 1 else v) * g

    def __repr__(self):
        return f"mult({getattr(self.coef, 'text', self.coef)!r})"


class _Convolution(Operator):
    def __init__(self, kind, beta=np.pi, func=None):
        self.kind = kind
        self.beta = beta
        self.func = func

    def multiplier(self, grid, p):
        if self.kind == "s":
            return MellinMultiplier.s_p(grid, p)
        if self.kind == "r":
            return MellinMultiplier.r_p_beta(grid, p, self.beta)
        return MellinMultiplier.from_function(grid, lambda xi: self.func(p, xi))

    def apply(self, g, grid, p):
        m = self.multiplier(grid, p)
        return apply_convolution(m, SampledFunction(grid, g),
                                 check_support=False).values

    def __repr__(self):
        return {"s": "S", "r": "R"}.get(self.kind, "Co(custom)")


class _ShiftOp(Operator):
    def __init__(self, shift, inverse=False):
        self.shift = shift
        self.inverse = inverse

    def apply(self, g, grid, p):
        g = np.asarray(g)
        w = np.exp(grid.x / p)
        w = w[:, None] if g.ndim > 1 else w
        f = g / w
        q = _shift_targets(self.shift, grid, self.inverse)
        return _interp(grid.x, f, q) * w

    def __repr__(self):
        return "W^-1" if self.inverse else "W"


class _Pdo(Operator):
    def __init__(self, symbol):
        self.symbol = symbol

    def apply(self, g, grid, p):
        return apply_pdo(self.symbol, SampledFunction(grid, g),
                         check_support=False).values

    def __repr__(self):
        return f"Op({self.symbol.tag})"


class _Sum(Operator):
    def __init__(self, terms):
        flat = []
        for c, op in terms:
            if isinstance(op, _Sum):
                flat += [(c * c2, op2) for c2, op2 in op.terms]
            else:
                flat.append((c, op))
        self.terms = flat

    def apply(self, g, grid, p):
        out = 0
        for c, op in self.terms:
            out = out + c * op.apply(g, grid, p)
        return out

    def __repr__(self):
        return " + ".join(f"{c:g}*{op!r}" for c, op in self.terms)


class _Compose(Operator):
    def __init__(self, left, right):
        self.left = left
        self.right = right

    def apply(self, g, grid, p):
        return self.left.apply(self.right.apply(g, grid, p), grid, p)

    def __repr__(self):
        return f"({self.left!r})({self.right!r})"


I = _Identity()
S = _Convolution("s")
R = _Convolution("r")
P_plus = 0.5 * (I + S)
P_minus = 0.5 * (I - S)


def mult(coef):
    """Multiplication by a coefficient (expression, callable of ``ln t``,
    or number)."""
    return _Multiply(coef)


def shift_op(shift, inverse=False):
    """Shift operator ``W_alpha`` (or ``W_beta`` with ``inverse``)."""
    return _ShiftOp(shift, inverse)


def convolution(kind="s", beta=np.pi, func=None):
    """Mellin convolution: ``'s'``, ``'r'`` (with ``beta``) or a custom
    multiplier ``func(p, xi)``."""
    return _Convolution(kind, beta, func)


def pdo(symbol):
    """Mellin pseudodifferential operator with the given symbol."""
    return _Pdo(symbol)


# --------------------------------------------------------------------------
# finite sections

@dataclass
class FiniteSection:
    """Dense matrix of an operator on ``Phi``-weighted nodal values."""

    matrix: np.ndarray = field(repr=False)
    grid: LogGrid
    p: float
    label: str = ""

    def section(self, m):
        """Centred ``m x m`` truncation."""
        n = self.matrix.shape[0]
        if m > n or m < 1:
            raise ValueError(f"section size {m} outside 1..{n}")
        lo = (n - m) // 2
        return self.matrix[lo:lo + m, lo:lo + m]


def finite_section(op, grid, p, max_n=2048, label=""):
    """Assemble ``op`` column by column on ``grid``.

    Column ``j`` is the image of the ``j``-th nodal basis vector.
    """
    if grid.n > max_n:
        raise MemoryError(f"grid size {grid.n} exceeds the cap {max_n}")
    mat = op.apply(np.eye(grid.n, dtype=complex), grid, p)
    return FiniteSection(np.ascontiguousarray(mat), grid, p, label)


@dataclass
class DecayProfile:
    """Smallest singular values of nested centred sections."""

    sizes: list
    sigma_min: list
    classification: str
    ratios: list = field(default_factory=list)


def classify_profile(sigmas, floor=1e-4, flat=0.10, drop=2.0):
    """``'BOUNDED-BELOW'``, ``'DECAYING'`` or ``'INDETERMINATE'``.

    Uses the last three values: bounded below when they vary by less
    than ``flat`` (relative) and stay above ``floor``; decaying when each
    doubling divides them by at least ``drop``.
    """
    s = np.asarray(sigmas[-3:], dtype=float)
    if len(s) < 3:
        return "INDETERMINATE"
    if s.min() > floor and (s.max() - s.min()) / s.max() < flat:
        return "BOUNDED-BELOW"
    with np.errstate(divide="ignore"):
        r = s[:-1] / s[1:]
    if np.all(r >= drop):
        return "DECAYING"
    return "INDETERMINATE"


def smallest_singular(fs, sizes):
    """Smallest singular value of each centred section in ``sizes``."""
    sizes = [int(m) for m in sizes]
    if len(sizes) < 4:
        raise ValueError("need at least four section sizes")
    sig = [float(linalg.svdvals(fs.section(m))[-1]) for m in sizes]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = [float(a / b) for a, b in zip(sig, sig[1:])]
    return DecayProfile(sizes, sig, classify_profile(sig), ratios)


_FSEC_MAGIC = b"FSEC"


def write_fsec(path, matrix):
    """Binary dump: ``FSEC``, little-endian u32 ``n``, row-major complex128."""
    m = np.asarray(matrix, dtype="<c16")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    with open(path, "wb") as fh:
        fh.write(_FSEC_MAGIC)
        fh.write(struct.pack("<I", m.shape[0]))
        fh.write(np.ascontiguousarray(m).tobytes())


def read_fsec(path):
    with open(path, "rb") as fh:
        if fh.read(4) != _FSEC_MAGIC:
            raise ValueError("not an FSEC file")
        (n,) = struct.unpack("<I", fh.read(4))
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != n * n:
        raise ValueError("truncated FSEC file")
    return data.reshape(n, n).astype(complex)
