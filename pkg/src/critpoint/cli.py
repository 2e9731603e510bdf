"""Command-line entry point: solve, sweep, plot, bounds, selfcheck."""
from __future__ import annotations

import argparse
import sys

from . import __version__
from ._accel import backend_name
from .bounds import ComplexityInputs, comparison_table
from .dispatcher import find_critical_point
from .errors import ConfigError, CritpointError, CsvFormatError
from .families import FAMILIES, make_test_objective
from .oracle import HessianMode

EXIT_OK, EXIT_CONFIG, EXIT_RUN, EXIT_SELFCHECK = 0, 2, 3, 4


def _params(pairs):
    out = {}
    for pair in pairs or []:
        key, sep, val = pair.partition("=")
        if not sep:
            raise ConfigError(f"--param expects key=value, got {pair!r}")
        try:
            out[key] = float(val)
        except ValueError:
            out[key] = val
    return out


def cmd_solve(args):
    if args.mode == "faithful" and args.scale != 1.0:
        raise ConfigError("--scale only applies with --mode practical")
    obj = make_test_objective(args.family, args.d, _params(args.param), args.seed)
    mode = HessianMode.parse(args.oracle, args.delta, args.seed)
    delta = mode.certified_delta(obj) if mode.kind == "zero" else args.delta
    report, decision = find_critical_point(
        obj, delta, args.eps, args.nh, mode, scale=args.scale, record_trace=False,
        max_iterations=args.max_iterations)
    print(f"branch           {decision.branch}")
    print(f"terminated       {report.terminated}")
    print(f"grad_norm_final  {report.grad_norm_final:.6e}")
    print(f"f_final          {report.f_final:.10g}")
    print(f"grad_queries     {report.ledger.grad_count}")
    print(f"hess_queries     {report.ledger.hess_count}")
    print(f"iterations       {report.iterations}")
    print(f"predicted_ceiling {decision.predicted_grad_ceiling:.6e}")
    return EXIT_OK if report.terminated == "eps_critical" else EXIT_RUN


def cmd_sweep(args):
    from .harness import load_config, run_sweep
    from .harness.sweep import format_summary

    configs = load_config(args.config)
    if args.out is None and not any(c.out for c in configs):
        raise ConfigError("no output path: pass --out or set out in the config")
    result = run_sweep(configs, out=args.out, workers=args.workers)
    print(format_summary(result.summary))
    print(f"wrote {len(result.rows)} rows to {result.path}")
    for err in result.errors:
        print(f"run error  {err}", file=sys.stderr)
    return EXIT_RUN if result.errors else EXIT_OK


def cmd_plot(args):
    from .harness import emit_tradeoff_plot

    n = emit_tradeoff_plot(args.csv, args.out)
    print(f"wrote {n} markers to {args.out}")
    return EXIT_OK


def cmd_bounds(args):
    inputs = ComplexityInputs(args.d, args.l1, args.l2, args.delta_subopt, args.eps, args.nh, args.delta)
    print("O-constants set to 1; values are for trend comparison only")
    print(f"{'method':<18} {'gradient queries':>18}")
    for method, value, note in comparison_table(inputs):
        shown = f"{value:18.6e}" if value is not None else f"{'n/a':>18}  ({note})"
        print(f"{method:<18} {shown}")
    return EXIT_OK


def cmd_selfcheck(args):
    from .harness import selfcheck

    report = selfcheck(seed=args.seed)
    for line in report.lines():
        print(line)
    print("selfcheck passed" if report.passed else "selfcheck FAILED")
    return EXIT_OK if report.passed else EXIT_SELFCHECK


def build_parser():
    parser = argparse.ArgumentParser(prog="critpoint", description=__doc__)
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__} ({backend_name()} backend)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="find an eps-critical point of a test function")
    p.add_argument("--family", choices=FAMILIES, default="quad_cos")
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--nh", type=int, default=1)
    p.add_argument("--oracle", choices=("exact", "zero", "noisy", "fd"), default="exact")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--mode", choices=("faithful", "practical"), default="faithful")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--max-iterations", type=int, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run an INI-configured sweep and write a CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="SVG of gradient queries against n_H")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("bounds", help="compare predicted gradient-query counts")
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--l1", type=float, default=None)
    p.add_argument("--l2", type=float, required=True)
    p.add_argument("--delta-subopt", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--nh", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.0)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("selfcheck", help="run the bundled property suites")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CsvFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CritpointError as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
