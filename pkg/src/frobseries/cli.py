"""``frobseries`` command-line front end.

Exit codes: 0 ok, 1 validation failure, 2 invalid input, 3 unsupported
case, 4 convergence or numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from contextlib import nullcontext

import numpy as np

from . import __version__
from .estimator import (
    ExtrapolationError,
    LogSeriesUnsupported,
    estimate_problem,
    write_estimate_csv,
)
from .frobenius import (
    ContinuationError,
    ConvergenceError,
    DivergenceError,
    RecursionBreakdown,
    SeriesKind,
    continue_from_series,
    evaluate,
    solve_series,
    write_coefficients_csv,
)
from .legendre import NonConvexError, write_binomial_csv
from .numerics import PrecisionError, format_decimal, parse_exact
from .ode import (
    CanonicalProblem,
    InvalidShift,
    PointClass,
    UndecidableIndexDifference,
    UnsupportedClassification,
    _fmt,
    as_ode,
    indicial_roots,
    load_problem,
    problem_from_dict,
    reduce_origin,
    to_canonical,
)
from .validation import run_corpus
from .wkb import PathObstruction, s_profile, write_profile_csv

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_UNSUPPORTED, EXIT_NUMERIC = 0, 1, 2, 3, 4

UNSUPPORTED = (UnsupportedClassification, InvalidShift, UndecidableIndexDifference, LogSeriesUnsupported)
NUMERIC = (ConvergenceError, DivergenceError, ContinuationError, RecursionBreakdown, PathObstruction,
           NonConvexError, ExtrapolationError, PrecisionError, ArithmeticError)


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _load(path: str):
    try:
        if path == "-":
            return problem_from_dict(json.load(sys.stdin))
        prob, _ = load_problem(path)
        return prob
    except (OSError, json.JSONDecodeError, ValueError, TypeError, KeyError) as exc:
        raise InputError(f"cannot read problem {path!r}: {exc}") from exc


def _point(text: str):
    try:
        return parse_exact(text)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _initial(text: str | None):
    if text is None:
        return None
    parts = text.split(";")
    if len(parts) != 2:
        raise InputError("--initial takes 'a;b'")
    return tuple(_point(p) for p in parts)


def _u_grid(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise InputError("--u takes 'start:stop:count'") from exc
    if n < 2 or not b > a:
        raise InputError("--u needs stop > start and count >= 2")
    return np.linspace(a, b, n)


def _csv_result(text: str) -> dict:
    rows = list(csv.reader(io.StringIO(text)))
    return {"columns": rows[0], "rows": rows[1:]}


class _Output:
    def __init__(self, args):
        self.args = args
        self.t0 = time.perf_counter()

    def emit(self, command: str, result: dict, text: str) -> None:
        if not self.args.reproducible:
            result = dict(result, wall_time_ms=round(1000 * (time.perf_counter() - self.t0), 3))
        if self.args.json:
            env = {"schema_version": SCHEMA_VERSION, "command": command, "result": result}
            self._write(json.dumps(env, indent=2, sort_keys=True) + "\n")
        else:
            self._write(text)

    def _write(self, text: str) -> None:
        out = getattr(self.args, "out", None)
        with (open(out, "w", newline="") if out else nullcontext(sys.stdout)) as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_classify(args, out: _Output) -> int:
    prob = as_ode(_load(args.file))
    cls, _ = reduce_origin(prob)
    if cls is PointClass.IRREGULAR:
        raise UnsupportedClassification("Irregular singular point at the origin")
    if cls is PointClass.ORDINARY:
        result = {"point_class": str(cls)}
        text = "Ordinary\n"
    else:
        data = indicial_roots(prob)
        case = f"IntegerDiff({data.ell})" if data.ell else str(data.case)
        result = {"point_class": str(cls), "case": case, "nu1": _root(data.nu1), "nu2": _root(data.nu2)}
        nu = f"nu={result['nu1']}" if data.nu1 == data.nu2 else f"nu1={result['nu1']}, nu2={result['nu2']}"
        text = f"{case}, {nu}\n{data.describe()}\n"
    out.emit("classify", dict(result, file=args.file), text)
    return EXIT_OK


def _root(v) -> str:
    return _fmt(v)


def cmd_solve(args, out: _Output) -> int:
    prob = as_ode(_load(args.file))
    at = _point(args.at)
    P = args.precision
    sol = solve_series(prob, args.solution, _initial(args.initial))
    if args.path:
        pts = [_point(p) for p in args.path.split(";") if p.strip()]
        res = continue_from_series(prob, sol, pts[0], pts[1:] + [at], P)
    else:
        res = evaluate(prob, sol, at, P)
    value, deriv = format_decimal(res.value, P), format_decimal(res.derivative, P)
    result = {
        "inputs": {"file": args.file, "at": args.at, "precision": P, "path": args.path, "solution": args.solution},
        "value": value,
        "derivative": deriv,
        "M_used": res.M_used,
        "max_term_log10": res.max_term_log10,
        "achieved_digits": res.achieved_digits_estimate,
    }
    text = f"value      {value}\nderivative {deriv}\nM_used     {res.M_used}\nmax_term_log10 {res.max_term_log10:.3f}\n"
    out.emit("solve", result, text)
    return EXIT_OK


def cmd_coeffs(args, out: _Output) -> int:
    prob = as_ode(_load(args.file))
    sol = solve_series(prob, args.solution, _initial(args.initial))
    buf = io.StringIO()
    write_coefficients_csv(buf, sol, args.count, args.digits)
    out.emit("coeffs", dict(_csv_result(buf.getvalue()), nu=_root(sol.nu), kind=str(sol.kind)), buf.getvalue())
    return EXIT_OK


def cmd_estimate(args, out: _Output) -> int:
    problem = _load(args.file)
    x = float(complex(_point(args.at)).real)
    if not x > 0:
        raise InputError("--at must be a positive modulus")
    if args.solution == "log":
        raise LogSeriesUnsupported("the logarithmic solution is not estimated")
    sol = solve_series(as_ode(problem), args.solution)
    if sol.kind is SeriesKind.FROBENIUS_LOG:
        raise LogSeriesUnsupported("the selected solution has logarithmic terms; estimation covers pure series only")
    est = estimate_problem(problem, x, args.precision, which=args.solution, n_phi=args.n_phi, jobs=args.jobs)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            write_estimate_csv(fh, est.curve)
    result = {
        "inputs": {"file": args.file, "at": args.at, "precision": args.precision, "solution": args.solution},
        "nu": est.nu,
        "m_peak": est.m_peak,
        "log10_max_term": est.log10_max_term,
        "M": est.M,
    }
    text = f"m_peak         {est.m_peak:.6g}\nlog10_max_term {est.log10_max_term:.6g}\nM              {est.M}\n"
    out.emit("estimate", result, text)
    return EXIT_OK


def cmd_profile(args, out: _Output) -> int:
    problem = _load(args.file)
    cp = problem if isinstance(problem, CanonicalProblem) else to_canonical(problem)
    prof = s_profile(cp, _u_grid(args.u), args.n_phi, terms=args.terms, var_power=args.var_power, jobs=args.jobs)
    buf = io.StringIO()
    write_profile_csv(buf, prof)
    out.emit("profile", _csv_result(buf.getvalue()), buf.getvalue())
    return EXIT_OK


def cmd_demo_binomial(args, out: _Output) -> int:
    if args.n < 2:
        raise InputError("--n must be at least 2")
    buf = io.StringIO()
    write_binomial_csv(buf, args.n)
    out.emit("demo-binomial", _csv_result(buf.getvalue()), buf.getvalue())
    return EXIT_OK


def cmd_validate(args, out: _Output) -> int:
    rows = run_corpus()
    text = "".join(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}\n" for name, ok, detail in rows)
    result = {"checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in rows]}
    out.emit("validate", result, text)
    return EXIT_OK if all(ok for _, ok, _ in rows) else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a JSON envelope")
    common.add_argument("--reproducible", action="store_true", help="omit wall-clock timings")
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker processes for grid commands")
    common.add_argument("--out", help="write output to this path instead of stdout")

    parser = argparse.ArgumentParser(prog="frobseries", description="Frobenius series solver and estimator")
    parser.add_argument("--version", action="version", version=f"frobseries {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="classify the expansion point")
    p.add_argument("file")
    p.set_defaults(func=cmd_classify)

    sol_choices = ("nu1", "nu2", "log")
    p = sub.add_parser("solve", parents=[common], help="evaluate a solution and its derivative")
    p.add_argument("file")
    p.add_argument("--at", required=True, help="point 're[,im]' (exact decimals or fractions)")
    p.add_argument("--precision", type=_positive_int, required=True, help="decimal digits")
    p.add_argument("--path", help="intermediate points 'z1;z2;...' for analytic continuation")
    p.add_argument("--solution", choices=sol_choices, default="nu2")
    p.add_argument("--initial", help="'psi0;dpsi0' at an ordinary point")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("coeffs", parents=[common], help="dump series coefficients as CSV")
    p.add_argument("file")
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--solution", choices=sol_choices, default="nu2")
    p.add_argument("--initial", help="'psi0;dpsi0' at an ordinary point")
    p.add_argument("--digits", type=_positive_int, default=30)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("estimate", parents=[common], help="predict peak term and term count")
    p.add_argument("file")
    p.add_argument("--at", required=True, help="modulus x > 0")
    p.add_argument("--precision", type=int, required=True, help="decimal digits P >= 0")
    p.add_argument("--solution", choices=sol_choices, default="nu2")
    p.add_argument("--n-phi", type=int, default=64)
    p.add_argument("--csv", help="also write the estimate curve to this CSV path")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("profile", parents=[common], help="WKB growth profile S(u) as CSV")
    p.add_argument("file")
    p.add_argument("--u", required=True, help="grid 'start:stop:count'")
    p.add_argument("--n-phi", type=int, default=64)
    p.add_argument("--terms", choices=("full", "exponent"), default="full")
    p.add_argument("--var-power", type=_positive_int, default=1, help="profile variable x = z^k")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("demo-binomial", parents=[common], help="coin-flip Legendre demo as CSV")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_demo_binomial)

    p = sub.add_parser("validate", parents=[common], help="run the built-in acceptance corpus")
    p.set_defaults(func=cmd_validate)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = _Output(args)
    try:
        return args.func(args, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UNSUPPORTED as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except NUMERIC as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
