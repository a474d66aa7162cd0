"""Discrete Mellin analysis on a log-uniform grid.

The grid is ``x_j = -L + 2 L j / n`` with ``t_j = exp(x_j)``.  Functions are
sampled at ``t_j``; the isometry ``Phi f = t**(1/p) f`` carries
``L^p(R+, dt)`` onto ``L^p(R+, dt/t)`` where Mellin convolutions are Fourier
multipliers in ``x = ln t``.

The discrete transform is

    (M g)(xi_k) = h * sum_j g_j exp(-i xi_k x_j),   xi_k = pi k / L,

with ``k`` in FFT order, and its inverse uses ``d xi = pi / L``.  Discrete
convolutions are periodic in ``x`` with period ``2 L``.

All array routines act along axis 0, so a stack of columns ``(n, m)`` is
transformed at once.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

__all__ = [
    "LogGrid",
    "SampledFunction",
    "MellinMultiplier",
    "PdoSymbol",
    "SupportWarning",
    "UnboundedSymbolError",
    "make_grid",
    "phi_map",
    "phi_inv",
    "mellin_forward",
    "mellin_inverse",
    "mult_s_p",
    "mult_r_p_beta",
    "apply_convolution",
    "apply_pdo",
    "tv_norm",
    "stechkin_bound",
    "s_norm_real_line",
]


class SupportWarning(UserWarning):
    """Input carries non-negligible mass near the grid edges."""


class UnboundedSymbolError(ValueError):
    """Symbol evaluation produced non-finite or excessive values."""


@dataclass(frozen=True)
class LogGrid:
    """Log-uniform grid on ``(exp(-L), exp(L))``."""

    L: float
    n: int

    @property
    def h(self):
        return 2.0 * self.L / self.n

    @property
    def x(self):
        return -self.L + self.h * np.arange(self.n)

    @property
    def t(self):
        return np.exp(self.x)

    @property
    def k(self):
        """Signed bin indices in FFT order."""
        return np.rint(sfft.fftfreq(self.n, 1.0 / self.n)).astype(int)

    @property
    def xi(self):
        return np.pi * self.k / self.L

    @property
    def dxi(self):
        return np.pi / self.L


def make_grid(L, n):
    """Grid with half-width ``L`` (in ``ln t``) and ``n`` nodes.

    ``n`` must be a power of two and at least 4.
    """
    L = float(L)
    n = int(n)
    if not L > 0:
        raise ValueError("L must be positive")
    if n < 4 or n & (n - 1):
        raise ValueError("n must be a power of two, n >= 4")
    return LogGrid(L, n)


@dataclass
class SampledFunction:
    """Samples ``values[j] = f(t_j)``; a trailing axis holds several columns."""

    grid: LogGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape[0] != self.grid.n:
            raise ValueError("sample count does not match the grid")

    @classmethod
    def from_function(cls, grid, func):
        """Sample ``func(x)`` given in the log coordinate."""
        return cls(grid, np.asarray(func(grid.x), dtype=complex))

    def _new(self, values):
        return SampledFunction(self.grid, values)

    def __add__(self, other):
        return self._new(self.values + _vals(other))

    def __sub__(self, other):
        return self._new(self.values - _vals(other))

    def __mul__(self, other):
        return self._new(self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self._new(-self.values)

    def norm(self, p=2.0):
        """``L^p(R+, dt)`` norm of the samples (trapezoid in ``x``)."""
        w = self.grid.t
        if self.values.ndim > 1:
            w = w[:, None]
        return float(np.sum(np.abs(self.values) ** p * w * self.grid.h) ** (1 / p))

    def norm_mu(self, p=2.0):
        """``L^p(R+, dt/t)`` norm, the natural norm after ``phi_map``."""
        return float(np.sum(np.abs(self.values) ** p * self.grid.h) ** (1 / p))


def _vals(other):
    return other.values if isinstance(other, SampledFunction) else other


def _col(w, values):
    return w[:, None] if values.ndim > 1 else w


def phi_map(f, p):
    """``(Phi f)(t) = t**(1/p) f(t)``."""
    return f._new(f.values * _col(np.exp(f.grid.x / p), f.values))


def phi_inv(f, p):
    """Inverse of :func:`phi_map`."""
    return f._new(f.values * _col(np.exp(-f.grid.x / p), f.values))


def _sign(grid):
    return np.where(grid.k % 2 == 0, 1.0, -1.0)


def mellin_forward(f):
    """Discrete Mellin transform of ``f`` (treated as dt/t data), FFT order."""
    g = f.values if isinstance(f, SampledFunction) else np.asarray(f)
    grid = f.grid
    sgn = _col(_sign(grid), g)
    return grid.h * sgn * sfft.fft(g, axis=0)


def mellin_inverse(spectrum, grid):
    """Inverse of :func:`mellin_forward`; returns a :class:`SampledFunction`."""
    spectrum = np.asarray(spectrum)
    sgn = _col(_sign(grid), spectrum)
    return SampledFunction(grid, sfft.ifft(sgn * spectrum, axis=0) / grid.h)


def _z(p, x):
    return np.pi * (np.asarray(x, dtype=float) + 1j / p)


def mult_s_p(p, x):
    """``coth(pi (x + i/p))`` evaluated without overflow."""
    x = np.asarray(x, dtype=float)
    z = _z(p, x)
    pos = x >= 0
    out = np.empty(x.shape, dtype=complex)
    e = np.exp(-2 * z[pos])
    out[pos] = (1 + e) / (1 - e)
    e = np.exp(2 * z[~pos])
    out[~pos] = -(1 + e) / (1 - e)
    return out


def mult_r_p_beta(p, beta, x):
    """``exp((x + i/p)(pi - beta)) / sinh(pi (x + i/p))`` for ``0 < beta < 2 pi``."""
    if not 0 < beta < 2 * np.pi:
        raise ValueError("beta must lie in (0, 2 pi)")
    x = np.asarray(x, dtype=float)
    w = x + 1j / p
    z = np.pi * w
    pos = x >= 0
    out = np.empty(x.shape, dtype=complex)
    out[pos] = (2 * np.exp(-w[pos] * beta)
                / (1 - np.exp(-2 * z[pos])))
    out[~pos] = (-2 * np.exp(w[~pos] * (2 * np.pi - beta))
                 / (1 - np.exp(2 * z[~pos])))
    return out


@dataclass
class MellinMultiplier:
    """Multiplier values on the dual grid, FFT order.

    ``func`` keeps the analytic form (for total variation) when known,
    and ``limits`` the values at ``-inf`` and ``+inf``.
    """

    grid: LogGrid
    values: np.ndarray = field(repr=False)
    tag: str = "custom"
    func: object = field(default=None, repr=False)
    limits: tuple = None

    @classmethod
    def from_function(cls, grid, func, tag="custom", limits=None):
        return cls(grid, np.asarray(func(grid.xi), dtype=complex), tag, func,
                   limits)

    @classmethod
    def s_p(cls, grid, p):
        return cls.from_function(grid, lambda x: mult_s_p(p, x), f"s_{p:g}",
                                 (-1.0, 1.0))

    @classmethod
    def r_p_beta(cls, grid, p, beta=np.pi):
        return cls.from_function(grid, lambda x: mult_r_p_beta(p, beta, x),
                                 f"r_{p:g},{beta:g}", (0.0, 0.0))

    @classmethod
    def constant(cls, grid, value):
        return cls.from_function(grid, lambda x: np.full(np.shape(x), value),
                                 "const", (value, value))


def tail_fraction(values, fraction=0.05):
    """Share of the squared norm carried by the outer ``fraction`` of nodes
    at each end."""
    v = np.abs(np.asarray(values)) ** 2
    if v.ndim > 1:
        v = v.sum(axis=1)
    n = v.shape[0]
    m = max(1, int(round(fraction * n)))
    total = float(v.sum())
    if total == 0:
        return 0.0
    return float((v[:m].sum() + v[-m:].sum()) / total)


def _check_support(values, threshold=1e-8):
    frac = tail_fraction(values)
    if frac > threshold:
        warnings.warn(f"{frac:.2e} of the norm lies near the grid edges; "
                      "periodic wrap-around will distort the result",
                      SupportWarning, stacklevel=3)


def apply_convolution(m, f, check_support=True):
    """``M^{-1} m M f`` for ``f`` already in ``dt/t`` form."""
    if m.grid != f.grid:
        raise ValueError("multiplier and function live on different grids")
    if check_support:
        _check_support(f.values)
    spec = mellin_forward(f)
    out = mellin_inverse(_col(m.values, spec) * spec, f.grid)
    return out


@dataclass
class PdoSymbol:
    """Symbol ``sym(x, xi)`` of a Mellin pseudodifferential operator.

    ``evaluator`` takes a column of log coordinates and a row of
    frequencies and returns the broadcast array.
    """

    evaluator: object
    tag: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, x, xi):
        return self.evaluator(x, xi)


def apply_pdo(sym, f, block=256, bound=1e12, check_support=True):
    """Apply ``Op(sym)`` to ``f`` (``dt/t`` form) by direct summation.

    ``out_j = (d xi / 2 pi) sum_k sym(x_j, xi_k) (M f)_k exp(i xi_k x_j)``.
    The phase is formed from integer indices so it is exact for any ``L``.
    """
    grid = f.grid
    if check_support:
        _check_support(f.values)
    spec = mellin_forward(f)
    vec = spec.ndim == 1
    if vec:
        spec = spec[:, None]
    n = grid.n
    x = grid.x
    xi = grid.xi
    k = grid.k
    sgn = _sign(grid)
    out = np.empty((n, spec.shape[1]), dtype=complex)
    scale = grid.dxi / (2 * np.pi)
    for start in range(0, n, block):
        j = np.arange(start, min(start + block, n))
        vals = np.asarray(sym(x[j][:, None], xi[None, :]), dtype=complex)
        vals = np.broadcast_to(vals, (len(j), n))
        top = np.max(np.abs(vals)) if vals.size else 0.0
        if not np.isfinite(top) or top > bound:
            raise UnboundedSymbolError(
                f"symbol {sym.tag!r} reached {top:.3g} on the grid")
        phase = sgn[None, :] * np.exp(2j * np.pi * (np.outer(j, k) % n) / n)
        out[j] = (vals * phase) @ spec * scale
    return SampledFunction(grid, out[:, 0] if vec else out)


def s_norm_real_line(p):
    """Norm of the Cauchy singular integral on ``L^p(R)``."""
    q = np.pi / (2 * p)
    return max(np.tan(q), 1 / np.tan(q))


def tv_norm(m, span=60.0, points=200001):
    """Total variation of a multiplier over the real line.

    Uses the analytic form on a fine uniform grid over ``[-span, span]``
    and adds the gaps to the limits at infinity.
    """
    if m.func is None:
        vals = m.values[np.argsort(m.grid.xi)]
        return float(np.sum(np.abs(np.diff(vals))))
    xs = np.linspace(-span, span, points)
    vals = np.asarray(m.func(xs), dtype=complex)
    v = float(np.sum(np.abs(np.diff(vals))))
    if m.limits is not None:
        lo, hi = m.limits
        v += abs(vals[0] - lo) + abs(vals[-1] - hi)
    return v


def stechkin_bound(m, p=None, s_norm=None):
    """Stechkin bound ``||S_R||_p (||m||_inf + V(m))`` for ``||Co(m)||``."""
    if s_norm is None:
        if p is None:
            raise ValueError("need p or s_norm")
        s_norm = s_norm_real_line(p)
    if m.func is not None:
        sup = float(np.max(np.abs(m.func(np.linspace(-60, 60, 200001)))))
    else:
        sup = float(np.max(np.abs(m.values)))
    return s_norm * (sup + tv_norm(m))
