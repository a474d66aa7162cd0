"""Command line front end: ``frshift check|solve|validate|oracle``.

Exit codes
----------
0  success (``check``: conditions sufficient)
1  input error (parse, certification, size cap)
2  ``check``: not sufficient or undecided
3  ``solve``: no invertibility branch on the chosen side
4  ``solve``: Neumann iteration did not converge
5  ``validate``: a check failed
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np
from scipy.interpolate import CubicSpline

from . import io
from .expr import ExprDomainError, ExprSyntaxError
from .fredholm import ProblemSpec, fredholm_verdict, oracle_operator
from .functional import (NonConvergenceError, SamplingError,
                         check_fo_conditions, neumann_solve)
from .mellin import SampledFunction, make_grid
from .operators import finite_section, smallest_singular, write_fsec
from .problem import ProblemError, read_problem
from .shift import validate_sos
from .so import CertificationError, certified
from .validate import bump, format_suite, run_suite

EXIT_OK, EXIT_INPUT, EXIT_INSUFFICIENT = 0, 1, 2
EXIT_NO_BRANCH, EXIT_NO_CONVERGENCE, EXIT_VALIDATE = 3, 4, 5
SIZE_CAP = 2048


class InputError(Exception):
    pass


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _load(args):
    """Parse and certify the problem file; raises :class:`InputError`."""
    try:
        prob = read_problem(args.path, args.config)
    except OSError as exc:
        raise InputError(f"cannot read {args.path}: {exc.strerror}") from None
    except ProblemError as exc:
        raise InputError(str(exc)) from None
    spec = ProblemSpec.from_problem(prob)
    for key in "abcd":
        rep = certified(getattr(spec, key))
        if not rep.passed:
            raise InputError(f"key {key}: not slowly oscillating ({rep.reason})")
    import warnings
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        srep = validate_sos(spec.shift)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if not srep.passed:
        raise InputError(f"key omega: {srep.reason}")
    return prob, spec


def _write(out, name, text):
    io.ensure_dir(out)
    path = os.path.join(out, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _config(prob, args):
    cfg = dict(prob.config)
    cfg["seed"] = args.seed
    return cfg


def _decision_lines(label, dec):
    lo0, hi0 = dec.limits["zero"]
    loi, hii = dec.limits["inf"]
    return [f"{label}: branch {dec.branch} ({dec.status})",
            f"  inf|coef| = {dec.inf_abs_a:.6g} / {dec.inf_abs_b:.6g}",
            f"  endpoint margins at 0: [{lo0:.6g}, {hi0:.6g}], "
            f"at inf: [{loi:.6g}, {hii:.6g}]"]


def cmd_check(args):
    prob, spec = _load(args)
    try:
        v = fredholm_verdict(spec, oracle=args.oracle)
    except SamplingError as exc:
        _err(str(exc))
        return EXIT_INSUFFICIENT
    fp, xw = v.cond_ii_witness
    s = v.summary
    lines = [f"status: {v.status}"]
    lines += _decision_lines("A_+ = aI - bW", v.cond_i_plus)
    lines += _decision_lines("A_- = cI - dW", v.cond_i_minus)
    lines += [f"min |n| over fibers x [-X, X]: {v.cond_ii_min_modulus:.6g}",
              f"  witness: fiber at {fp.endpoint} (ln t = {fp.log_t:.6g}), "
              f"x = {xw:.6g}",
              f"tail certificate for |x| > {s['X']:g}: {v.tail_certificate:.6g}",
              f"fibers: {s['fibers_zero']} at 0, {s['fibers_inf']} at inf "
              f"(epsilon {s['epsilon']:g})"]
    fields = v.key_values()
    fields["status"] = v.status
    fields["witness_x"] = xw
    if v.oracle_profile is not None:
        prof = v.oracle_profile
        lines.append(f"oracle ({v.oracle_label}): {prof.classification} "
                     + " ".join(f"{x:.4g}" for x in prof.sigma_min))
        fields["oracle"] = prof.classification
    report = io.format_report(f"frshift check {os.path.basename(args.path)}",
                              lines, fields, _config(prob, args))
    sys.stdout.write(report)
    _write(args.out, "report.txt", report)
    io.write_surface_csv(os.path.join(args.out, "symbol_surface.csv"), v.surface)
    return EXIT_OK if v.fredholm_sufficient else EXIT_INSUFFICIENT


def _load_rhs(source, grid, p):
    if source == "bump":
        return SampledFunction.from_function(grid, bump(0.0, 1.0, 0.0, p))
    try:
        data = np.genfromtxt(source, delimiter=",", names=True)
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc}") from None
    names = data.dtype.names or ()
    if not {"x", "re"}.issubset(names):
        raise InputError(f"{source}: need columns x, re (and optionally im)")
    vals = data["re"] + 1j * (data["im"] if "im" in names else 0.0)
    spline = CubicSpline(data["x"], vals)
    out = spline(grid.x)
    out[(grid.x < data["x"][0]) | (grid.x > data["x"][-1])] = 0
    return SampledFunction(grid, out)


def cmd_solve(args):
    prob, spec = _load(args)
    op = spec.plus if args.side == "plus" else spec.minus
    cfg = prob.config
    try:
        dec = check_fo_conditions(op, epsilon=cfg["cluster.epsilon"])
    except SamplingError as exc:
        _err(str(exc))
        return EXIT_NO_BRANCH
    lines = _decision_lines(f"side {args.side}", dec)
    if dec.branch == "NONE":
        _err(f"no invertibility branch on side {args.side} ({dec.status})")
        sys.stdout.write("\n".join(lines) + "\n")
        return EXIT_NO_BRANCH
    grid = make_grid(cfg["grid.L"], cfg["grid.n"])
    f = _load_rhs(args.rhs, grid, spec.p)
    code = EXIT_OK
    try:
        res = neumann_solve(op, f, dec, tol=cfg["tol.solve"],
                            max_iter=args.max_iter)
    except NonConvergenceError as exc:
        _err(str(exc))
        res = exc.result
        code = EXIT_NO_CONVERGENCE
    lines += [f"iterations: {res.iterations}", f"residual: {res.residual:.6e}"]
    fields = {"branch": dec.branch, "iterations": res.iterations,
              "residual": res.residual,
              "converged": str(code == EXIT_OK).lower()}
    report = io.format_report(f"frshift solve {os.path.basename(args.path)}",
                              lines, fields, _config(prob, args))
    sys.stdout.write(report)
    _write(args.out, "solve_report.txt", report)
    u = res.u.values
    io.write_csv(os.path.join(args.out, "solution.csv"),
                 ["x", "t", "re_u", "im_u"],
                 zip(grid.x, grid.t, u.real, u.imag))
    return code


def cmd_validate(args):
    results = run_suite(args.seed)
    report = format_suite(results, args.seed)
    sys.stdout.write(report)
    if args.out:
        _write(args.out, "validate_report.txt", report)
    failed = [r for r in results if not r.passed]
    if failed:
        _err(f"check failed: {failed[0].name}")
        return EXIT_VALIDATE
    return EXIT_OK


def cmd_oracle(args):
    prob, spec = _load(args)
    cfg = prob.config
    try:
        sizes = sorted(int(s) for s in args.sizes.split(","))
    except ValueError:
        raise InputError(f"bad size list {args.sizes!r}") from None
    n = cfg["oracle.n"]
    if n > SIZE_CAP or sizes[-1] > n or sizes[0] < 1:
        raise InputError(f"sizes must lie in 1..oracle.n = {n} and oracle.n "
                         f"may not exceed {SIZE_CAP}")
    bp = check_fo_conditions(spec.plus).branch
    bm = check_fo_conditions(spec.minus).branch
    grid = make_grid(cfg["oracle.L"], n)
    op, label = oracle_operator(spec, grid, bp, bm)
    fs = finite_section(op, grid, spec.p, max_n=SIZE_CAP, label=label)
    try:
        prof = smallest_singular(fs, sizes)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    io.ensure_dir(args.out)
    io.write_decay_csv(os.path.join(args.out, "decay.csv"), prof)
    if args.dump:
        write_fsec(os.path.join(args.out, args.dump), fs.matrix)
    lines = [f"operator: {label}"]
    lines += [f"m={m}: sigma_min={s:.6e}" for m, s in zip(prof.sizes, prof.sigma_min)]
    lines.append(f"classification: {prof.classification}")
    fields = {"classification": prof.classification, "form": label}
    report = io.format_report(f"frshift oracle {os.path.basename(args.path)}",
                              lines, fields, _config(prob, args))
    sys.stdout.write(report)
    _write(args.out, "oracle_report.txt", report)
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key")
    parser = argparse.ArgumentParser(
        prog="frshift",
        description="Fredholm checks for singular integral operators with "
                    "slowly oscillating shifts on the half-line.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="run the Fredholm verdict")
    p.add_argument("path")
    p.add_argument("--oracle", action="store_true",
                   help="attach the finite-section profile")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", parents=[common],
                       help="solve a binomial equation by Neumann series")
    p.add_argument("path")
    p.add_argument("--side", choices=("plus", "minus"), default="plus")
    p.add_argument("--rhs", default="bump", help="'bump' or a CSV file")
    p.add_argument("--max-iter", type=int, default=200)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", parents=[common], help="run the identity suite")
    p.set_defaults(func=cmd_validate, out=None)

    p = sub.add_parser("oracle", parents=[common],
                       help="finite-section decay profile")
    p.add_argument("path")
    p.add_argument("--sizes", default="128,256,512,1024")
    p.add_argument("--dump", metavar="FILE",
                   help="also write the assembled matrix (FSEC format)")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        _err(str(exc))
        return EXIT_INPUT
    except (ProblemError, CertificationError, ExprSyntaxError,
            ExprDomainError) as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
