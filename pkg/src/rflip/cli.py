"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 input error, 3 invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import (
    AlgorithmSpec,
    measure_matrix,
    read_records_csv,
    run_experiment,
    summarize,
    run_tests,
)
from .core import DimensionError
from .io import GeneratorSpec, InstanceParseError, generate_instance, load_instance, write_instance
from .solve import ALGORITHMS, make_config, solve
from .stats import StatsInputError
from .verify import CHECKS, run_checks

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _dump(obj, out):
    json.dump(obj, out, indent=2, sort_keys=False)
    out.write("\n")


def _load(path, minimize=False):
    try:
        return load_instance(path, minimize=minimize)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (InstanceParseError, DimensionError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def cmd_generate(args, out):
    try:
        spec = GeneratorSpec(n=args.n, density=args.density, coeff_lo=args.lo,
                             coeff_hi=args.hi, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    inst = generate_instance(spec, name=args.name)
    text = write_instance(inst)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


def cmd_solve(args, out):
    inst = _load(args.instance, minimize=args.minimize)
    params = {
        "r": args.r, "time_limit": args.time_limit, "seed": args.seed, "tenure": args.tenure,
        "max_restarts": args.max_restarts, "target": args.target,
    }
    try:
        cfg = make_config(args.algorithm, **params)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    res = solve(inst, args.algorithm, cfg)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "instance": {"path": str(args.instance), "name": inst.name, "n": inst.n, "nnz": inst.nnz},
        "algorithm": args.algorithm,
        "sense": "minimize" if args.minimize else "maximize",
        "config": cfg.to_dict(),
        "result": res.to_dict(include_x=not args.no_x),
    }
    if args.minimize:
        # the solver maximized the negated objective
        doc["result"]["objective"] = -res.best_f
    _dump(doc, out)
    return EXIT_OK


def _read_manifest(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"manifest {path} is not valid JSON: {exc}") from exc
    for key in ("instances", "algorithms"):
        if key not in doc:
            raise InputError(f"manifest is missing {key!r}")
    base = path.parent
    instances = []
    for p in doc["instances"]:
        full = Path(p) if Path(p).is_absolute() else base / p
        inst = _load(full)
        instances.append(inst)
    try:
        algorithms = [AlgorithmSpec.coerce(a) for a in doc["algorithms"]]
    except (KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"bad algorithm entry in manifest: {exc}") from exc
    for a in algorithms:
        if a.algorithm not in ALGORITHMS:
            raise InputError(f"unknown algorithm {a.algorithm!r} in manifest")
    return doc, instances, algorithms


def cmd_bench(args, out):
    doc, instances, algorithms = _read_manifest(args.manifest)
    runs = int(doc.get("runs", 10))
    try:
        report = run_experiment(
            instances, algorithms, runs=runs, time_limit=float(doc.get("time_limit", 60.0)),
            seeds=doc.get("seeds"), workers=args.workers or doc.get("workers", 1),
            measure=doc.get("measure", "best_f"),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.manifest).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_csv(out_dir / "runs.csv")
    report.write_json(out_dir / "report.json")
    _dump({"schema_version": SCHEMA_VERSION, **report.to_dict()}, out)
    return EXIT_OK


def cmd_stats(args, out):
    try:
        records = read_records_csv(args.csv)
    except OSError as exc:
        raise InputError(f"cannot read {args.csv}: {exc.strerror or exc}") from exc
    except (ValueError, KeyError) as exc:
        raise InputError(f"{args.csv}: {exc}") from exc
    algorithms = sorted({r.algorithm for r in records})
    if len(algorithms) < 2:
        raise UsageError(f"statistical tests need >= 2 algorithms, found {len(algorithms)}")
    insts, algs, mat = measure_matrix(records, args.measure, args.agg, algorithms)
    if len(insts) < 2:
        raise UsageError(f"statistical tests need >= 2 instances run by every algorithm, found {len(insts)}")
    try:
        tests = run_tests(mat, algs)
    except StatsInputError as exc:
        raise UsageError(str(exc)) from exc
    _dump({
        "schema_version": SCHEMA_VERSION,
        "measure": args.measure,
        "aggregate": args.agg,
        "instances": insts,
        "cells": summarize(records, algorithms),
        "tests": tests,
    }, out)
    return EXIT_OK


def cmd_verify(args, out):
    results = run_checks(args.check)
    for r in results:
        out.write(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.cases} instances): {r.detail}\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rflip", description="r-flip local search and hybrid tabu search for QUBO")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a random instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--density", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--lo", type=int, default=-100, help="smallest coefficient")
    g.add_argument("--hi", type=int, default=100, help="largest coefficient")
    g.add_argument("--name", default=None)
    g.add_argument("--out", "-o", default=None, help="output file (default: stdout)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one instance and print JSON")
    s.add_argument("instance")
    s.add_argument("--algorithm", choices=ALGORITHMS, default="alg5")
    s.add_argument("--r", type=int, default=None)
    s.add_argument("--time-limit", type=float, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tenure", type=int, default=None)
    s.add_argument("--max-restarts", type=int, default=None,
                   help="stop after this many restarts/starts (deterministic runs)")
    s.add_argument("--target", type=float, default=None, help="stop once this objective is reached")
    s.add_argument("--minimize", action="store_true", help="negate the input and minimize")
    s.add_argument("--no-x", action="store_true", help="omit the solution vector")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark manifest")
    b.add_argument("manifest")
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--out-dir", default=None)
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("stats", help="Friedman/Nemenyi/Wilcoxon over a run CSV")
    t.add_argument("csv")
    t.add_argument("--measure", default="best_f",
                   choices=("best_f", "time_to_best_s", "total_time_s", "flips", "restarts"))
    t.add_argument("--agg", default="mean", choices=("mean", "median", "max", "min"))
    t.set_defaults(func=cmd_stats)

    v = sub.add_parser("verify", help="run the small-instance oracle checks")
    v.add_argument("--check", action="append", choices=tuple(CHECKS))
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RuntimeError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
