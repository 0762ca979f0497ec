"""Command-line driver: ``gelfand-toda {eval,verify,demo-laplace}``."""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import hgf, laplace
from .errors import ContourError, DegenerateCycleError, GelfandTodaError, QuadratureError
from .verify import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, ConfigError, RunConfig, default_config, run, write_report


def _load(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else default_config()
    checks = args.checks.split(",") if getattr(args, "checks", None) else None
    return cfg.with_overrides(checks=checks, seed=args.seed, tol=args.tol, output=getattr(args, "out", None))


def _cmd_eval(args) -> int:
    cfg = _load(args)
    value = hgf.eval_phi(cfg.points, cfg.alpha_weights, (0, 1), cfg.settings, rho=cfg.rho)
    print("re %.17g" % value.value.real)
    print("im %.17g" % value.value.imag)
    print("error %.17g" % value.error)
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg = _load(args)
    report = run(cfg)
    out = cfg.output or "report.csv"
    csv_path, summary_path = write_report(report, out)
    summary = report.summary()
    for name, d in summary["checks"].items():
        print(f"{name:12s} rows={d['rows']:4d} failed={d['failed']:3d} max_residual={d['max_residual']:.3e}")
    if report.error:
        print(f"numerical failure: {report.error}", file=sys.stderr)
    print(f"report: {csv_path}  summary: {summary_path}")
    return report.exit_code


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a rational number: {text!r}") from exc


def _cmd_demo_laplace(args) -> int:
    a, b = _fraction(args.alpha), _fraction(args.beta)
    if args.n_min > 0 or args.n_max < 0:
        raise ConfigError("the n range must contain 0")
    M0 = laplace.gauge_conjugate(laplace.epd_seed_operator(a, b), laplace.epd_normal_gauge(a))
    seq = laplace.normal_sequence(M0, args.n_min, args.n_max)
    print(f"{'n':>4}  {'a_n':>20}  {'c_n':>24}  {'h_n':>24}  provenance")
    for n in range(seq.n_min, seq.n_max + 1):
        M = seq[n]
        print(f"{n:>4}  {str(M.a):>20}  {str(M.c):>24}  {str(seq.invariants(n).h):>24}  {seq.provenance[n]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gelfand-toda", description="Gelfand hypergeometric functions and Toda tau functions")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration (default: built-in N=5 setup)")
        p.add_argument("--seed", type=int, help="seed for randomized sweeps")
        p.add_argument("--tol", type=float, help="relative quadrature tolerance")

    p = sub.add_parser("eval", help="print Phi and its error estimate for a configuration")
    common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("verify", help="run check suites and write a CSV report")
    common(p)
    p.add_argument("--out", help="CSV report path (summary goes beside it)")
    p.add_argument("--checks", help="comma-separated subset of check suites")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("demo-laplace", help="print the EPD Laplace sequence table")
    p.add_argument("--alpha", default="1/2")
    p.add_argument("--beta", default="1/3")
    p.add_argument("--n-min", type=int, default=-5)
    p.add_argument("--n-max", type=int, default=5)
    p.set_defaults(func=_cmd_demo_laplace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, ContourError, DegenerateCycleError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GelfandTodaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
