"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Expected values come from brute-force oracles in ``conftest`` (enumeration
and from-scratch evaluation on a plain coefficient dict), never from the
code under test.
"""
import os
import subprocess
import sys
import textwrap
import time
from itertools import combinations

import numpy as np
import pytest
import scikit_posthocs as sp
from scipy import stats as scistats

from rflip import (
    GeneratorSpec,
    QuboInstance,
    SolutionState,
    alg1_one_flip,
    alg3_strategy1,
    alg4_strategy2,
    build_D1,
    compute_M,
    generate_instance,
    parse_instance,
    solve,
    write_instance,
)
from rflip.bench import d1_size_experiment, run_experiment
from rflip.stats import friedman_test, nemenyi_posthoc, wilcoxon_bonferroni, wilcoxon_signed_rank

from conftest import (
    all_assignments,
    dense_arrays,
    oracle_E,
    oracle_f,
    oracle_values,
    random_instance,
    record_acceptance,
)

DENSITIES = (0.3, 0.7, 1.0)


def _flip_rows(x, sets):
    X = np.repeat(x[None, :].astype(np.int64), len(sets), axis=0)
    for k, s in enumerate(sets):
        X[k, list(s)] ^= 1
    return X


def test_c01_delta_oracle_exactness():
    t0 = time.monotonic()
    rng = np.random.default_rng(101)
    checked = mismatches = 0
    for k in range(500):
        inst = random_instance(rng, int(rng.integers(1, 16)), DENSITIES[k % 3], -100, 100)
        x = rng.integers(0, 2, inst.n).astype(np.int8)
        state = SolutionState(inst, x)
        sets = [s for r in (1, 2, 3) for s in combinations(range(inst.n), r)]
        truth = oracle_values(inst, _flip_rows(x, sets)) - oracle_f(inst, x)
        for s, t in zip(sets, truth):
            got = state.delta_one_flip(s[0]) if len(s) == 1 else state.delta_set_flip(s)
            checked += 1
            if len(s) == 1 and state.delta_set_flip(s) != got:
                mismatches += 1
            mismatches += got != t
    elapsed = time.monotonic() - t0
    ok = mismatches == 0 and elapsed < 120
    record_acceptance(1, ok, f"{checked} deltas on 500 instances, {mismatches} mismatches, {elapsed:.1f}s (< 120s)")
    assert ok


def test_c02_update_rule_exactness():
    rng = np.random.default_rng(102)
    bad = 0
    for k in range(100):
        inst = random_instance(rng, int(rng.integers(2, 201)), DENSITIES[k % 3], -100, 100)
        state = SolutionState(inst, rng.integers(0, 2, inst.n).astype(np.int8))
        for _ in range(1000):
            r = int(rng.integers(1, min(4, inst.n) + 1))
            s = rng.choice(inst.n, size=r, replace=False)
            if r == 1:
                state.apply_one_flip(int(s[0]))
            else:
                state.apply_set_flip(s)
        if state.deriv.tolist() != oracle_E(inst, state.x) or state.objective != oracle_f(inst, state.x):
            bad += 1
    record_acceptance(2, bad == 0, f"100 instances x 1000 mixed flips, {bad} with E or f drift")
    assert bad == 0


def test_c03_alg1_local_optimality():
    rng = np.random.default_rng(103)
    violations = 0
    for k in range(100):
        inst = random_instance(rng, int(rng.integers(1, 501)), DENSITIES[k % 3], -100, 100)
        state = SolutionState(inst, rng.integers(0, 2, inst.n).astype(np.int8))
        alg1_one_flip(state)
        lin, Q = dense_arrays(inst)
        x = state.x.astype(np.int64)
        E = lin + Q @ x
        violations += int(np.sum((x == 0) & (E > 0)) + np.sum((x == 1) & (E < 0)))
    record_acceptance(3, violations == 0, f"100 instances up to n=500, {violations} single-flip violations")
    assert violations == 0


def test_c04_pruning_soundness():
    t0 = time.monotonic()
    rng = np.random.default_rng(104)
    sum_bad = pair_bad = outside_d1 = improving = optima = 0
    literal = 0  # violations phi = max q (plain maximum) would produce
    for k in range(200):
        n = int(rng.integers(2, 13))
        inst = random_instance(rng, n, DENSITIES[k % 3], -10, 10)
        lin, Q = dense_arrays(inst)
        X = all_assignments(n)
        E = lin + X @ Q
        local = np.all(((X == 0) & (E <= 0)) | ((X == 1) & (E >= 0)), axis=1)
        X, E = X[local], E[local]
        D = 1 - 2 * X
        optima += len(X)
        for r in (2, 3):
            if r > n:
                continue
            M = compute_M(inst, r)
            M_lit = max(inst.phi, 0) * r * (r - 1) // 2
            D1 = [set(build_D1(SolutionState(inst, x), M).tolist()) for x in X.astype(np.int8)]
            for S in combinations(range(n), r):
                S = list(S)
                pair = sum(D[:, a] * D[:, b] * Q[a, b] for a, b in combinations(S, 2))
                delta = (D[:, S] * E[:, S]).sum(axis=1) + pair
                sum_abs = np.abs(E[:, S]).sum(axis=1)
                for idx in np.flatnonzero(delta > 0):
                    improving += 1
                    sum_bad += sum_abs[idx] >= M
                    pair_bad += pair[idx] > M
                    outside_d1 += not set(S) <= D1[idx]
                    literal += sum_abs[idx] >= M_lit or pair[idx] > M_lit
    elapsed = time.monotonic() - t0
    ok = sum_bad == pair_bad == outside_d1 == 0 and elapsed < 300
    record_acceptance(
        4, ok,
        f"{optima} 1-flip optima, {improving} improving 2/3-flips: {sum_bad} sum-bound, {pair_bad} pair-bound, "
        f"{outside_d1} outside-D(1) violations with phi=max|q| ({literal} sets would violate with phi=max q), "
        f"{elapsed:.1f}s (< 300s)",
    )
    assert ok


def _planted_instance(rng, n):
    """TINY2B pattern on variables 0,1 with no coupling to a random background."""
    bg = random_instance(rng, n - 2, 0.5, -10, 10)
    rows, cols, vals = bg.pairs
    pairs = {(int(i) + 2, int(j) + 2): int(v) for i, j, v in zip(rows, cols, vals)}
    pairs[(0, 1)] = 3
    return QuboInstance(n, [-1, -1] + bg.linear.tolist(), pairs)


def test_c05_escape_capability():
    rng = np.random.default_rng(105)
    cases = with_pair = failures = 0
    for _ in range(60):
        n = int(rng.integers(4, 51))
        inst = _planted_instance(rng, n)
        x0 = rng.integers(0, 2, n).astype(np.int8)
        x0[:2] = 0
        base = SolutionState(inst, x0)
        alg1_one_flip(base)
        cases += 1
        pairs = list(combinations(range(n), 2))
        gains = oracle_values(inst, _flip_rows(base.x, pairs)) - oracle_f(inst, base.x)
        if not np.any(gains > 0):
            continue
        with_pair += 1
        for alg in (alg3_strategy1, alg4_strategy2):
            s = SolutionState(inst, x0)
            alg(s, r_max=2)
            if not oracle_f(inst, s.x) > oracle_f(inst, base.x):
                failures += 1
    ok = with_pair >= 50 and failures == 0
    record_acceptance(5, ok, f"{cases} planted instances, {with_pair} with an improving pair at the alg1 optimum, "
                             f"{failures} alg3/alg4 runs without strict improvement")
    assert ok


def _stratified_spearman(rows, key, stratum):
    """Spearman of ``key`` against |D(1)| ranked within each ``stratum`` level."""
    xs, ys = [], []
    for level in sorted({round(r[stratum], 1) for r in rows}):
        sub = [(r[key], v) for r in rows if round(r[stratum], 1) == level for v in r["sizes"]]
        ranks = scistats.rankdata([v for _, v in sub]) / len(sub)
        xs += [k for k, _ in sub]
        ys += ranks.tolist()
    return scistats.spearmanr(xs, ys)


def test_c06_d1_size_trends():
    insts = []
    for n in (500, 1000):
        for d in (0.3, 0.6, 0.9):
            for s in range(5):
                insts.append(generate_instance(GeneratorSpec(n=n, density=d, seed=600 + 10 * s + int(d * 10)),
                                               name=f"t1_n{n}_d{d}_s{s}"))
    rows = d1_size_experiment(insts, r=2, starts=20, seed=6)
    # each factor is tested within levels of the other
    rho_d, p_d = _stratified_spearman(rows, "density", "n")
    rho_n, p_n = _stratified_spearman(rows, "n", "density")
    mean_all = float(np.mean([r["mean"] for r in rows]))
    mean_best = float(np.mean([r["at_best"] for r in rows]))
    cells = {}
    for r in rows:
        cells.setdefault((r["n"], round(r["density"], 1)), []).append(r["mean"])
    table = ", ".join(f"n={n} d={d}: {np.mean(v):.1f}" for (n, d), v in sorted(cells.items()))
    ok = rho_d < 0 and p_d < 0.05 and rho_n > 0 and p_n < 0.05 and mean_best <= mean_all
    record_acceptance(
        6, ok,
        f"density rho={rho_d:.3f} p={p_d:.2g}; size rho={rho_n:.3f} p={p_n:.2g}; "
        f"mean |D(1)| at best {mean_best:.2f} <= overall {mean_all:.2f}; [{table}]",
    )
    assert ok


@pytest.mark.slow
def test_c07_hybrid_vs_mst2(tmp_path):
    insts = [generate_instance(GeneratorSpec(n=1000, density=0.9, seed=700 + k), name=f"c7_{k}")
             for k in range(10)]
    algs = [{"id": "alg5_r1", "algorithm": "alg5", "params": {"r": 1}},
            {"id": "mst2", "algorithm": "mst2", "params": {}}]
    workers = int(os.environ.get("RFLIP_WORKERS", "1"))
    rep = run_experiment(insts, algs, runs=10, time_limit=10.0, seeds=range(1, 11), workers=workers)
    rep.write_csv(tmp_path / "c7_runs.csv")
    wins = 0
    parts = []
    for inst in insts:
        a = rep.cell(inst.name, "alg5_r1")["mean_ofv"]
        b = rep.cell(inst.name, "mst2")["mean_ofv"]
        wins += a >= b
        parts.append(f"{a:.1f}/{b:.1f}")
    ok = wins >= 7 and not rep.failures
    record_acceptance(7, ok, f"alg5(r=1) mean OFV >= MST2-style on {wins}/10 instances (need 7); "
                             f"alg5/mst2 means: {'; '.join(parts)}")
    assert ok


def test_c08_statistics():
    chi2, df, _ = friedman_test(np.array([[1, 2, 3]] * 4))
    tied = friedman_test(np.full((4, 3), 7.0))
    wil = wilcoxon_signed_rank(np.arange(10.0), np.arange(10.0))[1]
    rng = np.random.default_rng(108)
    worst_nem = worst_wil = 0.0
    for k in range(20):
        n_blocks = int(rng.integers(6, 41))
        k_treat = int(rng.integers(3, 6))
        if k % 2:
            m = rng.integers(0, 15, size=(n_blocks, k_treat)).astype(float)
        else:
            m = rng.normal(size=(n_blocks, k_treat)) + np.arange(k_treat) * 0.3
        ref_nem = sp.posthoc_nemenyi_friedman(m).to_numpy()
        worst_nem = max(worst_nem, float(np.max(np.abs(nemenyi_posthoc(m) - ref_nem))))
        pairs = k_treat * (k_treat - 1) // 2
        ours = wilcoxon_bonferroni(m)
        for i, j in combinations(range(k_treat), 2):
            d = m[:, i] - m[:, j]
            nz = d[d != 0]
            if nz.size == 0:
                ref = 1.0
            else:
                exact = nz.size <= 25 and len(np.unique(np.abs(nz))) == nz.size
                ref = scistats.wilcoxon(m[:, i], m[:, j], zero_method="wilcox", correction=True,
                                        method="exact" if exact else "approx").pvalue
                ref = min(1.0, ref * pairs)
            worst_wil = max(worst_wil, abs(ours[i, j] - ref))
    ok = (chi2 == 8 and df == 2 and tied[0] == 0 and tied[2] == 1 and f"{wil:.6f}" == "1.000000"
          and worst_nem <= 1e-6 and worst_wil <= 1e-6)
    record_acceptance(
        8, ok,
        f"ordered chi2={chi2:g} df={df}; tied chi2={tied[0]:g} p={tied[2]:g}; identical Wilcoxon p={wil:.6f}; "
        f"max |diff| vs reference over 20 datasets: Nemenyi {worst_nem:.1e}, Wilcoxon+Bonferroni {worst_wil:.1e}",
    )
    assert ok


_GEN_SCRIPT = textwrap.dedent("""
    import hashlib
    from rflip import GeneratorSpec, generate_instance, write_instance
    for n, d, s in [(50, 0.3, 1), (200, 0.9, 2), (1000, 0.5, 3**30), (7, 1.0, 0)]:
        text = write_instance(generate_instance(GeneratorSpec(n=n, density=d, seed=s)))
        print(hashlib.sha256(text.encode()).hexdigest())
""")


def test_c09_io_round_trip_and_determinism():
    rng = np.random.default_rng(109)
    bad = 0
    for k in range(100):
        spec = GeneratorSpec(n=int(rng.integers(1, 300)), density=float(rng.choice([0.1, 0.5, 1.0])),
                             seed=int(rng.integers(2**63)))
        inst = generate_instance(spec)
        text = write_instance(inst)
        back = parse_instance(text)
        bad += not (back == inst and write_instance(back) == text)
    outs = [subprocess.run([sys.executable, "-c", _GEN_SCRIPT], capture_output=True, text=True, check=True).stdout
            for _ in range(2)]
    same = outs[0] == outs[1] and len(outs[0].split()) == 4
    ok = bad == 0 and same
    record_acceptance(9, ok, f"100 generated instances, {bad} round-trip failures; "
                             f"two processes produced {'identical' if same else 'DIFFERENT'} instances")
    assert ok


def test_c10_micro_global_optima():
    rng = np.random.default_rng(110)
    misses = []
    for k in range(200):
        n = int(rng.integers(1, 13))
        inst = generate_instance(GeneratorSpec(n=n, density=DENSITIES[k % 3], seed=int(rng.integers(2**32))),
                                 name=f"micro{k}")
        f_star = int(oracle_values(inst, all_assignments(n)).max())
        for alg in ("alg2", "alg3", "alg4", "alg5", "mst2"):
            # the target only ends a run early once f* is hit; best-so-far is monotone,
            # so the reported value equals that of a full 1 s run
            res = solve(inst, alg, r=2, time_limit=1.0, seed=k, target=f_star)
            if res.best_f != f_star or oracle_f(inst, res.best_x) != f_star:
                misses.append(f"{inst.name}/{alg}")
    ok = not misses
    record_acceptance(10, ok, f"200 instances n<=12 x 5 algorithms, {len(misses)} missed the brute-force optimum"
                              + (f": {misses[:10]}" if misses else ""))
    assert ok
