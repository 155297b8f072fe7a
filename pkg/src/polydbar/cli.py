"""Command-line entry point: ``polydbar <experiment> [options]``.

Exit status is 0 when every check passes, 1 when a validation check fails
and 2 for usage errors (bad flags, bad values, unwritable output).
"""
from __future__ import annotations

import argparse
import sys

from .fields import NotClosedError
from .experiments import EXPERIMENTS, TOLERANCES, ExperimentConfig, emit_result, replay, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _grid(text: str) -> tuple:
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    for p in parts:
        r, _, a = p.partition("x")
        if not (r.isdigit() and a.isdigit()):
            raise argparse.ArgumentTypeError(f"grid must look like 48x96, got {p!r}")
    return parts


def _tol(text: str) -> tuple:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("tolerance must be key=value")
    if key not in TOLERANCES:
        raise argparse.ArgumentTypeError(f"unknown tolerance {key!r}; known: {', '.join(sorted(TOLERANCES))}")
    try:
        return key, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance value must be a number, got {value!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polydbar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--chart", default="disc", help="named chart or a JSON chart file")
        p.add_argument("--n", type=int, default=2, help="number of factors")
        p.add_argument("--grid", type=_grid, default=None,
                       help="RxA, or one RxA per factor separated by commas")
        p.add_argument("--corpus", default="polynomial")
        p.add_argument("--count", type=int, default=None, help="corpus size")
        p.add_argument("--gamma", type=_floats, default=(0.0,), help="weight exponents, e.g. 0,0.25,0.5")
        p.add_argument("--p", type=_floats, default=None, help="exponents, e.g. 2,4,inf")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="report directory")
        p.add_argument("--tol", "--tolerance", dest="tol", type=_tol, action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--quadrature", choices=("product", "subtraction", "naive"), default=None)
        p.add_argument("--ordering", choices=("ascending", "descending"), default="ascending")
        p.add_argument("--levels", type=int, default=3, help="grid levels for convergence")
        p.add_argument("--oracle", action="store_true", help="also compare against the oracle")
        p.add_argument("--samples", type=int, default=None, help="sample count for kernel bounds")
        p.add_argument("--bounds", default=None, help="comma-separated bound names")
    p = sub.add_parser("replay", help="re-run a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    return parser


def config_from_args(args) -> ExperimentConfig:
    ps = args.p
    if ps is None:
        ps = (float("inf"),)
    return ExperimentConfig(
        experiment=args.command,
        chart=args.chart,
        grid=args.grid,
        n=args.n,
        corpus=args.corpus,
        count=args.count,
        gammas=args.gamma,
        ps=ps,
        seed=args.seed,
        out=args.out,
        tolerances=tuple(args.tol),
        quadrature=args.quadrature,
        ordering=args.ordering,
        levels=args.levels,
        oracle=args.oracle,
        samples=args.samples,
        bounds=tuple(b for b in (args.bounds or "").split(",") if b),
    )


def _print(result, paths) -> None:
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} {c.relation} {c.limit:.6g}")
    for note in result.notes:
        print(f"note: {note}")
    if paths:
        print(f"wrote {paths[0]} and {paths[1]}")
    print("passed" if result.passed else "FAILED")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "replay":
            result, paths = replay(args.manifest, args.out)
        else:
            config = config_from_args(args)
            result = run_experiment(config)
            paths = emit_result(result, config.out) if config.out else None
    except NotClosedError as exc:
        # a gate breach on the data, not a usage problem
        print(f"polydbar: validation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, KeyError, OSError) as exc:
        print(f"polydbar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _print(result, paths)
    return EXIT_OK if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
