"""Replicated, time-limited benchmark runs and their summary tables."""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .core import QuboInstance, SolutionState
from .search import build_D1, compute_M
from .solve import solve
from .stats import compute_rsd, friedman_test, nemenyi_posthoc, wilcoxon_bonferroni

log = logging.getLogger(__name__)

CSV_FIELDS = (
    "instance", "algorithm", "seed", "best_f", "time_to_best_s", "total_time_s", "flips", "restarts",
)
WORKERS_ENV = "RFLIP_WORKERS"


@dataclass
class RunRecord:
    instance: str
    algorithm: str
    seed: int
    best_f: float
    time_to_best_s: float
    total_time_s: float
    flips: int
    restarts: int

    def __post_init__(self):
        if self.time_to_best_s > self.total_time_s:
            raise ValueError("time_to_best_s exceeds total_time_s")


@dataclass
class AlgorithmSpec:
    """An algorithm column: a label, the solver name and its parameters."""

    id: str
    algorithm: str
    params: dict = field(default_factory=dict)

    @classmethod
    def coerce(cls, obj) -> "AlgorithmSpec":
        if isinstance(obj, AlgorithmSpec):
            return obj
        if isinstance(obj, str):
            return cls(id=obj, algorithm=obj)
        return cls(id=obj.get("id", obj["algorithm"]), algorithm=obj["algorithm"],
                   params=dict(obj.get("params", {})))


@dataclass
class ExperimentReport:
    records: list
    cells: list
    failures: list = field(default_factory=list)
    tests: dict | None = None
    config: dict = field(default_factory=dict)

    def cell(self, instance, algorithm) -> dict:
        for c in self.cells:
            if c["instance"] == instance and c["algorithm"] == algorithm:
                return c
        raise KeyError((instance, algorithm))

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "config": self.config,
            "cells": self.cells,
            "tests": self.tests,
            "failures": self.failures,
        }

    def write_csv(self, path) -> None:
        write_records_csv(self.records, path)

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        w.writeheader()
        for r in records:
            w.writerow(asdict(r))


def read_records_csv(path) -> list[RunRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"CSV is missing columns: {sorted(missing)}")
        for row in reader:
            bf = float(row["best_f"])
            out.append(RunRecord(
                instance=row["instance"], algorithm=row["algorithm"], seed=int(row["seed"]),
                best_f=int(bf) if bf.is_integer() else bf,
                time_to_best_s=float(row["time_to_best_s"]), total_time_s=float(row["total_time_s"]),
                flips=int(row["flips"]), restarts=int(row["restarts"]),
            ))
    return out


def time_deviation(times) -> tuple[float, float]:
    """Sample SD and range of times-to-best; ``(0, 0)`` for a single run."""
    t = np.asarray(times, dtype=np.float64)
    if t.size < 2:
        return 0.0, 0.0
    return float(t.std(ddof=1)), float(t.max() - t.min())


def summarize(records, algorithms=None) -> list[dict]:
    """One row per (instance, algorithm): best OFV, hits, RSD, time deviation."""
    groups = {}
    for r in records:
        groups.setdefault((r.instance, r.algorithm), []).append(r)
    best_known = {}
    for (inst, _), rs in groups.items():
        b = max(r.best_f for r in rs)
        best_known[inst] = max(best_known.get(inst, b), b)
    order = list(algorithms) if algorithms else sorted({a for _, a in groups})
    cells = []
    for inst in sorted({i for i, _ in groups}):
        for alg in order:
            rs = sorted(groups.get((inst, alg), []), key=lambda r: r.seed)
            if not rs:
                continue
            ofv = [r.best_f for r in rs]
            best = max(ofv)
            hit_times = [r.time_to_best_s for r in rs if r.best_f == best]
            all_times = [r.time_to_best_s for r in rs]
            dt_sd, dt_range = time_deviation(hit_times)
            cells.append({
                "instance": inst,
                "algorithm": alg,
                "runs": len(rs),
                "best_ofv": best,
                "mean_ofv": float(np.mean(ofv)),
                "hits": len(hit_times),
                "rsd": compute_rsd(ofv),
                "matched_best_known": best == best_known[inst],
                "timing": {
                    "time_to_best_mean_s": float(np.mean(all_times)),
                    "time_to_best_sd_s": time_deviation(all_times)[0],
                    "dt_sd_s": dt_sd,
                    "dt_range_s": dt_range,
                },
            })
    return cells


def measure_matrix(records, measure="best_f", agg="mean", algorithms=None):
    """``(instances, algorithms, matrix)`` of per-cell aggregates, complete blocks only."""
    if measure not in ("best_f", "time_to_best_s", "total_time_s", "flips", "restarts"):
        raise ValueError(f"unknown measure {measure!r}")
    reduce = {"mean": np.mean, "median": np.median, "max": np.max, "min": np.min}[agg]
    groups = {}
    for r in records:
        groups.setdefault((r.instance, r.algorithm), []).append(getattr(r, measure))
    algs = list(algorithms) if algorithms else sorted({a for _, a in groups})
    insts = sorted(i for i in {i for i, _ in groups} if all((i, a) in groups for a in algs))
    mat = np.array([[reduce(groups[(i, a)]) for a in algs] for i in insts], dtype=np.float64)
    return insts, algs, mat.reshape(len(insts), len(algs))


def run_tests(matrix, labels) -> dict:
    chi2, df, p = friedman_test(matrix)
    return {
        "labels": list(labels),
        "friedman": {"statistic": chi2, "df": df, "p_value": p},
        "nemenyi": nemenyi_posthoc(matrix).tolist(),
        "wilcoxon_bonferroni": wilcoxon_bonferroni(matrix).tolist(),
    }


def _run_cell(args):
    inst, spec, seed, time_limit = args
    params = {"time_limit": time_limit, **spec.params, "seed": seed}
    try:
        res = solve(inst, spec.algorithm, **params)
    except Exception as exc:  # one failing cell must not sink the experiment
        log.exception("cell %s/%s/%s failed", inst.name, spec.id, seed)
        return None, {"instance": inst.name, "algorithm": spec.id, "seed": seed, "error": repr(exc)}
    rec = RunRecord(
        instance=inst.name, algorithm=spec.id, seed=int(seed), best_f=res.best_f,
        time_to_best_s=float(res.time_to_best), total_time_s=float(res.total_time),
        flips=int(res.flips), restarts=int(res.restarts),
    )
    return rec, None


def resolve_workers(workers: int | None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, int(workers or 1))


def run_experiment(
    instances,
    algorithms,
    runs: int = 10,
    time_limit: float = 60.0,
    seeds=None,
    workers: int | None = 1,
    measure: str = "best_f",
) -> ExperimentReport:
    """Run every (instance, algorithm, seed) cell and aggregate the results.

    ``instances`` are ``QuboInstance`` objects with unique names; ``algorithms``
    are solver names, dicts or ``AlgorithmSpec``.  Results are keyed by
    (instance, algorithm, seed), so the report does not depend on worker
    scheduling.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    seeds = list(range(1, runs + 1)) if seeds is None else [int(s) for s in seeds]
    if len(seeds) != runs or len(set(seeds)) != runs:
        raise ValueError("need exactly `runs` distinct seeds")
    instances = list(instances)
    names = [i.name for i in instances]
    if len(set(names)) != len(names):
        raise ValueError("instance names must be unique")
    specs = [AlgorithmSpec.coerce(a) for a in algorithms]
    if len({s.id for s in specs}) != len(specs):
        raise ValueError("algorithm ids must be unique")

    tasks = [(inst, spec, seed, time_limit) for inst in instances for spec in specs for seed in seeds]
    nw = resolve_workers(workers)
    if nw > 1:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            outcomes = list(pool.map(_run_cell, tasks))
    else:
        outcomes = [_run_cell(t) for t in tasks]

    records = sorted((r for r, _ in outcomes if r is not None),
                     key=lambda r: (r.instance, r.algorithm, r.seed))
    failures = [e for _, e in outcomes if e is not None]
    ids = [s.id for s in specs]
    cells = summarize(records, ids)
    tests = None
    insts, algs, mat = measure_matrix(records, measure, algorithms=ids)
    if len(insts) >= 2 and len(algs) >= 2:
        tests = {"measure": measure, **run_tests(mat, algs)}
    config = {
        "instances": names,
        "algorithms": [asdict(s) for s in specs],
        "runs": runs,
        "seeds": seeds,
        "time_limit": time_limit,
        "workers": nw,
    }
    return ExperimentReport(records=records, cells=cells, failures=failures, tests=tests, config=config)


def d1_size_experiment(instances, r: int = 2, starts: int = 20, seed: int = 0, phi_mode: str = "abs"):
    """|D(1)| at 1-flip local optima reached from random starts.

    Returns one row per instance with the mean/min/max size over all local
    optima, the size at the best local optimum found, and the raw samples.
    """
    rows = []
    for idx, inst in enumerate(instances):
        rng = np.random.default_rng([seed, idx])
        M = compute_M(inst, r, phi_mode)
        sizes, objs = [], []
        for _ in range(starts):
            state = SolutionState(inst, rng.integers(0, 2, size=inst.n, dtype=np.int8))
            state.run_one_flip_sweeps()
            sizes.append(int(len(build_D1(state, M))))
            objs.append(state.objective)
        best = int(np.argmax(objs))
        rows.append({
            "instance": inst.name,
            "n": inst.n,
            "density": inst.density,
            "M": M,
            "mean": float(np.mean(sizes)),
            "min": int(min(sizes)),
            "max": int(max(sizes)),
            "at_best": sizes[best],
            "sizes": sizes,
            "objectives": objs,
        })
    return rows


def group_d1_table(rows, density_digits: int = 1) -> list[dict]:
    """Average the per-instance rows by (n, rounded density)."""
    groups = {}
    for row in rows:
        groups.setdefault((row["n"], round(row["density"], density_digits)), []).append(row)
    out = []
    for (n, dens), rs in sorted(groups.items()):
        out.append({
            "n": n,
            "density": dens,
            "instances": len(rs),
            "mean": float(np.mean([r["mean"] for r in rs])),
            "min": min(r["min"] for r in rs),
            "max": max(r["max"] for r in rs),
            "mean_at_best": float(np.mean([r["at_best"] for r in rs])),
        })
    return out


def records_fields():
    return [f.name for f in fields(RunRecord)]
