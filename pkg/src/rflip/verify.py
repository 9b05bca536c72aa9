"""Small-instance oracle checks, run by ``rflip verify``.

Each check compares the incremental machinery against brute-force
recomputation on random instances small enough to enumerate.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .core import QuboInstance, SolutionState, compute_derivatives, evaluate_objective
from .io import GeneratorSpec, generate_instance
from .search import alg1_one_flip, build_D1, compute_M
from .solve import solve


@dataclass
class CheckResult:
    name: str
    passed: bool
    cases: int
    detail: str = ""


def brute_force_optimum(inst: QuboInstance):
    """``(f*, x*)`` by enumerating all 2^n assignments (n <= 20)."""
    if inst.n > 20:
        raise ValueError("brute force limited to n <= 20")
    X = np.array(list(product((0, 1), repeat=inst.n)), dtype=np.int64)
    Q = np.triu(inst.to_dense(), 1)
    f = X @ np.asarray(inst.linear) + np.einsum("ki,ij,kj->k", X, Q, X)
    k = int(np.argmax(f))
    return f[k].item(), X[k].astype(np.int8)


def _instances(count, n_lo, n_hi, seed):
    rng = np.random.default_rng(seed)
    for k in range(count):
        n = int(rng.integers(n_lo, n_hi + 1))
        dens = float(rng.choice([0.3, 0.7, 1.0]))
        yield generate_instance(GeneratorSpec(n=n, density=dens, coeff_lo=-10, coeff_hi=10,
                                              seed=int(rng.integers(2**31))), name=f"v{k}")


def check_deltas(count=50, seed=0) -> CheckResult:
    bad = 0
    rng = np.random.default_rng(seed)
    for inst in _instances(count, 2, 10, seed):
        state = SolutionState(inst, rng.integers(0, 2, inst.n, dtype=np.int8))
        f0 = state.objective
        for r in (1, 2, 3):
            for s in combinations(range(inst.n), r):
                x = state.x.copy()
                x[list(s)] ^= 1
                if state.delta_set_flip(s) != evaluate_objective(inst, x) - f0:
                    bad += 1
    return CheckResult("delta_exactness", bad == 0, count, f"{bad} mismatches")


def check_updates(count=20, flips=200, seed=1) -> CheckResult:
    bad = 0
    rng = np.random.default_rng(seed)
    for inst in _instances(count, 5, 40, seed):
        state = SolutionState(inst, rng.integers(0, 2, inst.n, dtype=np.int8))
        for _ in range(flips):
            r = int(rng.integers(1, min(4, inst.n) + 1))
            s = rng.choice(inst.n, size=r, replace=False)
            if r == 1:
                state.apply_one_flip(int(s[0]))
            else:
                state.apply_set_flip(s)
        if not (np.array_equal(state.deriv, compute_derivatives(inst, state.x))
                and state.objective == evaluate_objective(inst, state.x)):
            bad += 1
    return CheckResult("update_exactness", bad == 0, count, f"{bad} drifted states")


def check_pruning(count=50, seed=2) -> CheckResult:
    """Improving 2/3-flips at 1-flip optima respect the sum bound and D(1)."""
    bad = 0
    rng = np.random.default_rng(seed)
    for inst in _instances(count, 3, 9, seed):
        for _ in range(3):
            state = SolutionState(inst, rng.integers(0, 2, inst.n, dtype=np.int8))
            alg1_one_flip(state)
            absE = np.abs(state.deriv)
            for r in (2, 3):
                M = compute_M(inst, r)
                D1 = set(build_D1(state, M).tolist())
                for s in combinations(range(inst.n), r):
                    if state.delta_set_flip(s) > 0:
                        if absE[list(s)].sum() >= M or not set(s) <= D1:
                            bad += 1
    return CheckResult("pruning_soundness", bad == 0, count, f"{bad} violations")


def check_optima(count=20, seed=3, time_limit=1.0) -> CheckResult:
    bad = []
    for inst in _instances(count, 2, 10, seed):
        f_star, _ = brute_force_optimum(inst)
        for alg in ("alg2", "alg3", "alg4", "alg5", "mst2"):
            res = solve(inst, alg, time_limit=time_limit, seed=1, target=f_star)
            if res.best_f != f_star:
                bad.append(f"{inst.name}/{alg}")
    return CheckResult("micro_optima", not bad, count, ", ".join(bad) or "all optimal")


CHECKS = {
    "deltas": check_deltas,
    "updates": check_updates,
    "pruning": check_pruning,
    "optima": check_optima,
}


def run_checks(names=None) -> list[CheckResult]:
    return [CHECKS[name]() for name in (names or CHECKS)]
