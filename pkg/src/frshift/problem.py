"""Problem files and the configuration table.

A problem file is UTF-8 text with one ``key = value`` pair per line; ``#``
starts a comment.  Expression keys hold coefficient text, numeric keys
override the defaults below.

========================  =========  ======================================
key                       default    meaning
========================  =========  ======================================
``p``                     2          Lebesgue exponent, ``1 < p < inf``
``a b c d``               0          coefficient expressions
``omega``                 0          shift exponent, ``alpha = t e**omega``
``grid.L``                12         half-width of the Mellin grid in ln t
``grid.n``                4096       Mellin grid size (power of two)
``x.max``                 6          symbol grid half-width ``X``
``x.nodes``               2401       symbol grid size
``cluster.epsilon``       1e-3       cluster radius
``tol.solve``             1e-8       Neumann residual tolerance
``margin.fredholm``       1e-6       margin for non-vanishing
``oracle.L``              256        finite-section grid half-width
``oracle.n``              1024       finite-section grid size
========================  =========  ======================================
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .expr import ExprDomainError, ExprSyntaxError, parse_expr

__all__ = ["DEFAULTS", "EXPR_KEYS", "ProblemError", "ProblemFile",
           "parse_problem", "read_problem"]

EXPR_KEYS = ("a", "b", "c", "d", "omega")

DEFAULTS = {
    "p": 2.0,
    "grid.L": 12.0,
    "grid.n": 4096,
    "x.max": 6.0,
    "x.nodes": 2401,
    "cluster.epsilon": 1e-3,
    "tol.solve": 1e-8,
    "margin.fredholm": 1e-6,
    "oracle.L": 256.0,
    "oracle.n": 1024,
}

_INT_KEYS = {"grid.n", "x.nodes", "oracle.n"}


class ProblemError(ValueError):
    """Invalid problem file; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


@dataclass
class ProblemFile:
    """Parsed problem: expression texts and the effective configuration."""

    exprs: dict
    config: dict = field(default_factory=lambda: dict(DEFAULTS))

    def expression(self, key):
        return parse_expr(self.exprs.get(key, "0"))


def _coerce(key, value):
    try:
        if key in _INT_KEYS:
            f = float(value)
            if not f.is_integer():
                raise ValueError
            return int(f)
        return float(value)
    except ValueError:
        raise ProblemError(f"{key}: expected a number, got {value!r}", key) from None


def apply_overrides(config, pairs):
    """Apply ``key=value`` overrides (strings) to a config dict in place."""
    for item in pairs:
        if "=" not in item:
            raise ProblemError(f"malformed override {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in DEFAULTS:
            raise ProblemError(f"unknown key {key}", key)
        config[key] = _coerce(key, value)
    _check_config(config)
    return config


def _check_config(config):
    if not config["p"] > 1:
        raise ProblemError("p must satisfy 1 < p", "p")
    for key in ("grid.L", "x.max", "oracle.L", "cluster.epsilon",
                "tol.solve", "margin.fredholm"):
        if not config[key] > 0:
            raise ProblemError(f"{key} must be positive", key)
    for key in ("grid.n", "oracle.n"):
        n = config[key]
        if n < 4 or n & (n - 1):
            raise ProblemError(f"{key} must be a power of two", key)
    if config["x.nodes"] < 3:
        raise ProblemError("x.nodes must be at least 3", "x.nodes")


def parse_problem(text, overrides=()):
    """Parse problem-file text.

    Raises
    ------
    ProblemError
        On unknown keys, malformed lines, bad numbers or expressions that
        fail to parse.
    """
    exprs = {}
    config = dict(DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ProblemError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in EXPR_KEYS:
            try:
                parse_expr(value)
            except (ExprSyntaxError, ExprDomainError) as exc:
                raise ProblemError(f"{key}: {exc}", key) from None
            exprs[key] = value
        elif key in DEFAULTS:
            config[key] = _coerce(key, value)
        else:
            raise ProblemError(f"unknown key {key}", key)
    _check_config(config)
    apply_overrides(config, overrides)
    for key in EXPR_KEYS:
        exprs.setdefault(key, "0")
    return ProblemFile(exprs, config)


def read_problem(path, overrides=()):
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read(), overrides)
