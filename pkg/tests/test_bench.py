import json

import numpy as np
import pytest

from rflip import GeneratorSpec, generate_instance
from rflip.bench import (
    CSV_FIELDS,
    RunRecord,
    d1_size_experiment,
    group_d1_table,
    read_records_csv,
    run_experiment,
    summarize,
    time_deviation,
)


def test_single_cell(TINY3):
    rep = run_experiment([TINY3], ["alg5"], runs=1, time_limit=0.2)
    cell = rep.cell("TINY3", "alg5")
    assert cell["hits"] == 1 and cell["rsd"] == 0
    assert rep.tests is None


def test_tiny3_alg5_vs_mst2(TINY3):
    rep = run_experiment([TINY3], ["alg5", "mst2"], runs=10, time_limit=1.0)
    for alg in ("alg5", "mst2"):
        c = rep.cell("TINY3", alg)
        assert c["best_ofv"] == 6 and c["hits"] == 10


def _masked(report):
    d = report.to_dict()
    for c in d["cells"]:
        c.pop("timing")
    return d


def test_reproducible_with_budgets(TINY3, TINY2B):
    algs = [{"id": "hyb", "algorithm": "alg5", "params": {"max_restarts": 3, "r": 2}},
            {"id": "ms", "algorithm": "alg4", "params": {"max_starts": 3}}]
    a = run_experiment([TINY3, TINY2B], algs, runs=3, time_limit=60)
    b = run_experiment([TINY3, TINY2B], algs, runs=3, time_limit=60)
    assert _masked(a) == _masked(b)
    assert a.tests is not None and a.tests["labels"] == ["hyb", "ms"]
    assert [(r.best_f, r.flips) for r in a.records] == [(r.best_f, r.flips) for r in b.records]


def test_failure_is_recorded(TINY3):
    bad = {"id": "bad", "algorithm": "alg5", "params": {"tenure": 0}}
    rep = run_experiment([TINY3], ["alg1", bad], runs=2, time_limit=0.1)
    assert len(rep.failures) == 2 and rep.failures[0]["algorithm"] == "bad"
    assert len(rep.records) == 2


def test_preconditions(TINY3):
    with pytest.raises(ValueError):
        run_experiment([TINY3], ["alg1"], runs=0)
    with pytest.raises(ValueError):
        run_experiment([TINY3], ["alg1"], runs=2, seeds=[1, 1])
    with pytest.raises(ValueError):
        run_experiment([TINY3, TINY3], ["alg1"], runs=1)


def test_workers_env(monkeypatch, TINY3, TINY2B):
    monkeypatch.setenv("RFLIP_WORKERS", "2")
    algs = [{"id": "a", "algorithm": "alg4", "params": {"max_starts": 2}}]
    rep = run_experiment([TINY3, TINY2B], algs, runs=2, time_limit=60)
    assert rep.config["workers"] == 2
    assert [r.best_f for r in rep.records] == [1, 1, 6, 6]


def test_csv_round_trip(tmp_path, TINY3):
    rep = run_experiment([TINY3], ["alg1", "alg4"], runs=2, time_limit=0.1)
    p = tmp_path / "runs.csv"
    rep.write_csv(p)
    assert p.read_text().splitlines()[0] == ",".join(CSV_FIELDS)
    assert read_records_csv(p) == [
        RunRecord(**{**r.__dict__, "time_to_best_s": float(f"{r.time_to_best_s}"),
                     "total_time_s": float(f"{r.total_time_s}")})
        for r in rep.records
    ]
    rep.write_json(tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["schema_version"] == 1


def test_summary_fields():
    recs = [RunRecord("i", "a", s, f, t, t + 1, 0, 0)
            for s, (f, t) in enumerate([(10, 1.0), (10, 3.0), (8, 0.5)])]
    (cell,) = summarize(recs)
    assert cell["best_ofv"] == 10 and cell["hits"] == 2
    assert cell["timing"]["dt_sd_s"] == pytest.approx(np.std([1.0, 3.0], ddof=1))
    assert cell["timing"]["dt_range_s"] == 2.0
    assert 1 <= cell["hits"] <= cell["runs"] and cell["rsd"] >= 0


def test_run_record_invariant():
    with pytest.raises(ValueError):
        RunRecord("i", "a", 1, 0, 2.0, 1.0, 0, 0)


def test_time_deviation_single():
    assert time_deviation([3.0]) == (0.0, 0.0)


class TestD1:
    def test_tiny3(self, TINY3):
        (row,) = d1_size_experiment([TINY3], r=2, starts=10, phi_mode="max")
        assert row["at_best"] == 0 and max(row["objectives"]) == 6

    def test_tiny2b(self, TINY2B):
        # the 1-flip optima are (0,0) with |E| = (1,1) and (1,1) with |E| = (2,2), both below M = 3
        (row,) = d1_size_experiment([TINY2B], r=2, starts=20)
        assert set(row["objectives"]) <= {0, 1}
        assert row["sizes"] == [2] * 20

    def test_grouping(self):
        insts = [generate_instance(GeneratorSpec(n=30, density=d, seed=s), name=f"g{d}{s}")
                 for d in (0.3, 0.9) for s in (1, 2)]
        table = group_d1_table(d1_size_experiment(insts, starts=3))
        assert [(r["n"], r["density"], r["instances"]) for r in table] == [(30, 0.3, 2), (30, 0.9, 2)]
