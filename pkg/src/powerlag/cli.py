"""Command-line entry point.

Subcommands::

    simulate   integrate a model file or built-in scenario, write CSV/JSON
    derive     print the symbolic covector X_k (normalized)
    check      run the certification checks
    scenario   list scenarios or emit one as a model file
    spectrum   tabulate W_n

Exit codes: 0 success, 1 check failure, 2 usage or input error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import checks, expr as ex, modelfile, scenarios
from .integrate import COMPLETED, IntegratorConfig, simulate
from .jets import JetState
from .model import compile_model
from .quantize import SpectrumParams, spectrum_Wn

__all__ = ["main", "run", "EXIT_OK", "EXIT_CHECK_FAILED", "EXIT_USAGE", "EXIT_NUMERICAL"]

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
CHECK_NAMES = ("identity", "covariance", "homogeneity", "variational")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _model_source(p, positional=True):
    if positional:
        p.add_argument("model_file", nargs="?", metavar="model-file")
    p.add_argument("--model", dest="model_flag", metavar="FILE")
    p.add_argument("--scenario", metavar="NAME")


def _integrator_flags(p):
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--t1", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--method", choices=("rk4", "rk45"))
    p.add_argument("--rel-tol", type=float)
    p.add_argument("--abs-tol", type=float)
    p.add_argument("--beta", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="powerlag", description="Power-Lagrangian dynamics toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate a model")
    _model_source(p)
    _integrator_flags(p)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("derive", help="print the normalized covector X")
    _model_source(p)
    p.add_argument("--out", default="-")

    p = sub.add_parser("check", help="run certification checks")
    p.add_argument("which", choices=("all",) + CHECK_NAMES)
    _model_source(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--out", default=None, help="also write the JSON report here")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="json prints the machine report instead of the table")

    p = sub.add_parser("scenario", help="list scenarios or emit one as a model file")
    p.add_argument("--emit", metavar="NAME")
    p.add_argument("--out", default="-")

    p = sub.add_parser("spectrum", help="tabulate W_n")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--hlambda", type=float, required=True)
    p.add_argument("--p0", type=float, required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--nmax", type=int, default=10)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _write(target, text):
    if target in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _load(args):
    """The model spec and, for scenarios, the scenario object."""
    sources = [s for s in (getattr(args, "model_file", None), args.model_flag, args.scenario) if s]
    if len(sources) != 1:
        raise UsageError("give exactly one model source: a model file or --scenario NAME")
    if args.scenario:
        try:
            sc = scenarios.get(args.scenario)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        # through the file format, so scenario and emitted file behave identically
        return modelfile.loads(modelfile.dumps(sc.spec)), sc
    try:
        return modelfile.load(sources[0]), None
    except OSError as exc:
        raise UsageError(f"cannot read {sources[0]}: {exc.strerror}") from None


def _simulate(args):
    spec, _ = _load(args)
    if spec.initial is None:
        raise UsageError("the model has no [initial] section")
    cfg = IntegratorConfig(**spec.integrator).with_overrides(
        t0=args.t0, t1=args.t1, dt=args.dt, method=args.method,
        rel_tol=args.rel_tol, abs_tol=args.abs_tol, beta=args.beta)
    traj = simulate(compile_model(spec), spec.initial, cfg)
    _write(args.out, traj.to_csv() if args.format == "csv" else traj.to_jsonl())
    if traj.status != COMPLETED:
        print(f"error: integration stopped at t = {traj.t[-1]!r}: {traj.status} ({traj.message})",
              file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def derive_text(spec) -> str:
    """One line ``X<k> = <expr>`` per coordinate, parameters kept symbolic."""
    cm = compile_model(spec, bind_params=False)
    return "".join(f"X{k} = {ex.format_expr(ex.normalize(X))}\n" for k, X in enumerate(cm.X))


def _derive(args):
    spec, _ = _load(args)
    _write(args.out, derive_text(spec))
    return EXIT_OK


def _reference_jet(cm, spec, rng):
    """A jet off the solution manifold for the variational check."""
    n = cm.n
    s = spec.initial or JetState(t=0.0, q=np.zeros(n), qd=np.ones(n))
    qd = s.qd if s.qd is not None else np.ones(n)
    return JetState(t=s.t, q=s.q, qd=qd, qdd=rng.uniform(-1, 1, n), qddd=rng.uniform(-1, 1, n))


def run_checks(spec, which="all", *, seed=0, samples=100, timelike=False) -> list:
    """Reports (or ``(name, reason)`` pairs for skipped checks), ordered by name."""
    cm = compile_model(spec)
    chosen = CHECK_NAMES if which == "all" else (which,)
    out = []
    if "identity" in chosen:
        out.append(checks.check_identity(cm.L, samples, seed, n=cm.n))
    if "covariance" in chosen:
        for chart in checks.chart_library(cm.n):
            out.append(checks.check_covariance(cm, chart, samples, seed, timelike=timelike))
    if "homogeneity" in chosen:
        PE = ex.substitute(spec.PE, {ex.param(k): v for k, v in spec.params.items()})
        if which == "all" and not spec.homogeneous_pe and PE is not ex.ZERO:
            out.append(("homogeneity", "P_E not declared homogeneous"))
        else:
            out.append(checks.check_homogeneity(PE, samples, seed, n=cm.n))
    if "variational" in chosen:
        if cm.m:
            out.append(("variational", "Y is undefined for constrained models"))
        else:
            rng = checks.rng_for(seed, "variational")
            s = _reference_jet(cm, spec, rng)
            v = rng.normal(size=cm.n)
            v /= np.linalg.norm(v)
            report = checks.check_variational(cm, s, v)
            out.append(report)
            if abs(report.details["Y_term"]) > 1e-3 * max(1.0, abs(report.details["X_term"])):
                out.append(checks.variational_halving(cm, s, v))
            else:
                out.append(("variational_halving", "Y term vanishes on this curve"))
    return sorted(out, key=lambda r: r[0] if isinstance(r, tuple) else r.name)


def format_table(results) -> str:
    rows = [("check", "samples", "max_deviation", "tolerance", "result")]
    for r in results:
        if isinstance(r, tuple):
            rows.append((r[0], "-", "-", "-", f"skipped: {r[1]}"))
        else:
            rows.append((r.name, str(r.samples), f"{r.max_deviation:.3e}", f"{r.tolerance:.0e}",
                         "pass" if r.passed else "FAIL"))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    return "".join("  ".join(cell.ljust(w) for cell, w in zip(row[:4], widths)) + "  " + row[4] + "\n"
                   for row in rows)


def _report_json(results, which, seed) -> str:
    items = [{"name": r[0], "skipped": r[1]} if isinstance(r, tuple) else r.to_dict() for r in results]
    doc = {"check": which, "seed": seed,
           "passed": all(isinstance(r, tuple) or r.passed for r in results), "reports": items}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _check(args):
    spec, sc = _load(args)
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    timelike = bool(sc and sc.expected.get("normalized"))
    results = run_checks(spec, args.which, seed=args.seed, samples=args.samples, timelike=timelike)
    report = _report_json(results, args.which, args.seed)
    _write("-", report if args.format == "json" else format_table(results))
    if args.out:
        _write(args.out, report)
    ok = all(isinstance(r, tuple) or r.passed for r in results)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _scenario(args):
    if args.emit is None:
        _write(args.out, "".join(f"{name}\n" for name in scenarios.names()))
        return EXIT_OK
    try:
        sc = scenarios.get(args.emit)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    _write(args.out, modelfile.dumps(sc.spec))
    return EXIT_OK


def _spectrum(args):
    if args.nmax < 0:
        raise UsageError("--nmax must be nonnegative")
    try:
        sp = SpectrumParams(args.gamma, args.mu, args.hlambda, args.p0, args.t)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    values = [(n, spectrum_Wn(sp, n)) for n in range(args.nmax + 1)]
    if args.format == "json":
        text = "".join(json.dumps({"n": n, "W_n": w}) + "\n" for n, w in values)
    else:
        text = "n,W_n\n" + "".join(f"{n},{w:.17g}\n" for n, w in values)
    _write(args.out, text)
    return EXIT_OK


_COMMANDS = {"simulate": _simulate, "derive": _derive, "check": _check,
             "scenario": _scenario, "spectrum": _spectrum}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        # singular systems, Newton failures, domain errors during evaluation
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # malformed model files, expressions, models, initial data or charts
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    sys.exit(run(argv))
