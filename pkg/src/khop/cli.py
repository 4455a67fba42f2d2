"""Command-line harness: generate instances, verify them, run suites.

Subcommands: ``gen`` writes an instance file, ``verify`` runs the matching
suite on a saved instance, ``axioms`` runs the axiom suite directly from
generator flags, ``report`` pretty-prints a saved report, ``acceptance``
runs the pinned acceptance criteria.  The exit code is 0 exactly when the
requested verification passed.  Relative output paths resolve against
``KHOP_OUT_DIR`` when that variable is set.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .acceptance import run_acceptance
from .errors import KhopError
from .generators import gen_instance
from .serialize import load_instance, save_instance
from .suites import format_report, load_report, run_suite, save_report
from .tolerances import DEFAULT_TOLERANCES


def _out_path(raw: str) -> Path:
    path = Path(raw)
    base = os.environ.get("KHOP_OUT_DIR")
    if base and not path.is_absolute():
        return Path(base) / path
    return path


def _parse_dims(spec: str, atoms: int):
    parts = spec.split(",")
    if len(parts) == 1:
        return int(parts[0])
    return tuple(int(p) for p in parts)


def _add_gen_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--atoms", type=int, default=2)
    parser.add_argument("--dims", type=str, default="2",
                        help="fiber dims: one integer or a per-atom comma list")
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="khop")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance file")
    gen.add_argument("--kind", required=True,
                     choices=["derivation", "automorphism", "star_iso", "axioms"])
    _add_gen_flags(gen)
    gen.add_argument("--components", type=int, default=2,
                     help="component count for star_iso instances")
    gen.add_argument("--condition-cap", type=float, default=1e3)
    gen.add_argument("--operators", type=int, default=4,
                     help="operator count for axioms instances")
    gen.add_argument("--out", required=True)

    verify = sub.add_parser("verify", help="run the suite for a saved instance")
    verify.add_argument("instance")
    verify.add_argument("--tol", type=float, default=1.0,
                        help="joint scale factor for eq/leibniz/residual tolerances")
    verify.add_argument("--cases", type=int, default=200)
    verify.add_argument("--out", default=None, help="also save the report here")

    axioms = sub.add_parser("axioms", help="run the axiom suite from flags")
    _add_gen_flags(axioms)
    axioms.add_argument("--operators", type=int, default=4)
    axioms.add_argument("--cases", type=int, default=200)
    axioms.add_argument("--tol", type=float, default=1.0)
    axioms.add_argument("--out", default=None)

    report = sub.add_parser("report", help="pretty-print a saved report")
    report.add_argument("report")

    acceptance = sub.add_parser("acceptance", help="run the acceptance criteria")
    acceptance.add_argument("--tol", type=float, default=1.0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except KhopError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "gen":
        dims = _parse_dims(args.dims, args.atoms)
        inst = gen_instance(args.kind, args.atoms, dims, args.seed,
                            condition_cap=args.condition_cap,
                            components=args.components,
                            operators=args.operators)
        out = _out_path(args.out)
        save_instance(inst, out)
        print(f"wrote {out}")
        return 0

    if args.command == "verify":
        inst = load_instance(args.instance)
        tol = DEFAULT_TOLERANCES.scaled(args.tol)
        report = run_suite(inst, tol, cases=args.cases)
        print(format_report(report))
        if args.out:
            save_report(report, _out_path(args.out))
        return 0 if report.verdict else 1

    if args.command == "axioms":
        dims = _parse_dims(args.dims, args.atoms)
        inst = gen_instance("axioms", args.atoms, dims, args.seed,
                            operators=args.operators)
        tol = DEFAULT_TOLERANCES.scaled(args.tol)
        report = run_suite(inst, tol, cases=args.cases)
        print(format_report(report))
        if args.out:
            save_report(report, _out_path(args.out))
        return 0 if report.verdict else 1

    if args.command == "report":
        report = load_report(args.report)
        print(format_report(report))
        return 0 if report.verdict else 1

    if args.command == "acceptance":
        results = run_acceptance(args.tol)
        for result in results:
            print(result.line())
        return 0 if all(r.passed for r in results) else 1

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
