"""CSV and report writers.

Every CSV has a header row, floats with 17 significant digits and LF
line endings.
"""
from __future__ import annotations

import csv
import os

import numpy as np

__all__ = ["write_csv", "write_sampled_csv", "write_spectrum_csv",
           "write_surface_csv", "write_decay_csv", "format_report",
           "format_value"]


def format_value(v, short=False):
    """Text form of a scalar: 17 significant digits, or the shortest
    round-trip form when ``short``."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if short else "%.17g" % v
    return str(v)


def write_csv(path, header, rows):
    """Write ``rows`` (iterables of scalars) under ``header``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def write_sampled_csv(path, f, extra=None):
    """Columns ``x, t, re, im`` for a sampled function."""
    x, t, v = f.grid.x, f.grid.t, np.asarray(f.values, dtype=complex)
    rows = zip(x, t, v.real, v.imag)
    return write_csv(path, ["x", "t", "re", "im"], rows)


def write_spectrum_csv(path, grid, spectrum):
    """Spectral dump in the same layout: ``x`` holds the dual frequency,
    ``t`` the bin index."""
    order = np.argsort(grid.xi, kind="stable")
    s = np.asarray(spectrum, dtype=complex)[order]
    rows = zip(grid.xi[order], grid.k[order], s.real, s.imag)
    return write_csv(path, ["x", "t", "re", "im"], rows)


def write_surface_csv(path, surface):
    rows = ((i, x, n.real, n.imag, abs(n)) for i, x, n in surface.rows())
    return write_csv(path, ["fiber_id", "x", "re_n", "im_n", "abs_n"], rows)


def write_decay_csv(path, profile):
    return write_csv(path, ["m", "sigma_min"],
                     zip(profile.sizes, profile.sigma_min))


def format_report(title, lines, fields, config):
    """Plain-text report: free-form lines, a ``key=value`` block and the
    effective configuration."""
    out = [title, "=" * len(title)]
    out += list(lines)
    out.append("")
    out.append("[result]")
    out += [f"{k}={format_value(v, short=True)}" for k, v in fields.items()]
    out.append("")
    out.append("[config]")
    out += [f"{k}={format_value(config[k], short=True)}" for k in sorted(config)]
    return "\n".join(out) + "\n"


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
