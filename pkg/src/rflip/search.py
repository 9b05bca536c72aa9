"""1-flip and r-flip local search with derivative-based candidate pruning.

After a 1-flip local optimum is reached, a set S can only be an improving
r-flip if ``sum_{i in S} |E_i| < M(r) = phi * C(r, 2)``.  Two candidate
families follow from that bound:

* ``D(n)``: the longest prefix of variables sorted by ``|E|`` whose
  cumulative ``|E|`` stays below ``M`` (every subset passes the bound);
* ``D(1)``: every variable with ``|E_i| < M`` (every member of an improving
  set belongs to it).

``phi`` defaults to ``max |q_ij|``.  ``phi_mode="max"`` uses the plain
maximum instead; that value does not bound pair terms of opposite-direction
flips on negative coefficients, so the filters become heuristic.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .core import FlipSet, QuboInstance, SolutionState

PHI_MODES = ("abs", "max")


@dataclass
class LocalSearchResult:
    state: SolutionState
    flips: int = 0
    passes: int = 0
    improved: bool = False
    rflip_moves: int = 0
    evaluations: int = 0
    aborted: bool = False


@dataclass
class PruningContext:
    """Variables sorted by ``|E|`` and the prefix bound ``K`` for a given ``M``."""

    M: float
    order: np.ndarray
    prefix: np.ndarray
    K: int
    abs_deriv: np.ndarray = field(repr=False)
    phi: float | None = None

    @property
    def Dn(self) -> np.ndarray:
        return self.order[: self.K]


def compute_phi(inst: QuboInstance, phi_mode: str = "abs"):
    if phi_mode == "abs":
        return inst.phi_abs
    if phi_mode == "max":
        return inst.phi
    raise ValueError(f"phi_mode must be one of {PHI_MODES}, got {phi_mode!r}")


def compute_M(inst: QuboInstance, r: int, phi_mode: str = "abs"):
    """Upper bound on the pair-interaction gain of any r-flip."""
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    return compute_phi(inst, phi_mode) * comb(r, 2)


def _abs_order(state: SolutionState):
    a = np.abs(state.deriv)
    # stable sort -> ties broken by ascending index
    return a, np.argsort(a, kind="stable")


def build_D1(state: SolutionState, M) -> np.ndarray:
    """Indices with ``|E_i| < M``, ascending."""
    return np.flatnonzero(np.abs(state.deriv) < M)


def build_Dn(state: SolutionState, M, phi=None) -> PruningContext:
    a, order = _abs_order(state)
    prefix = np.cumsum(a[order])
    K = int(np.searchsorted(prefix, M, side="left"))
    return PruningContext(M=M, order=order, prefix=prefix, K=K, abs_deriv=a, phi=phi)


def candidate_prefix_sets(ctx: PruningContext) -> list[FlipSet]:
    """``{pi(1), pi(2)}, {pi(1), pi(2), pi(3)}, ..., {pi(1), ..., pi(K)}``."""
    return [FlipSet.of(ctx.order[:k]) for k in range(2, ctx.K + 1)]


def improving_rflip_certificate(state: SolutionState, s) -> bool:
    """True when ``sum |E_i|`` over S is strictly below the pair term of S.

    Valid only at a 1-flip local optimum; elsewhere it falls back to a direct
    ``delta > eps`` check.
    """
    eps = state.instance.eps
    if not state.is_one_flip_local_opt():
        return state.delta_set_flip(s) > eps
    fs = FlipSet.of(s)
    inst = state.instance
    idx = fs.indices
    lhs = sum(abs(state.deriv[i]) for i in idx)
    d = [1 - 2 * int(state.x[i]) for i in idx]
    pair = 0
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            pair += d[a] * d[b] * inst.coef(idx[a], idx[b])
    return bool(pair - lhs > eps)


def alg1_one_flip(state: SolutionState) -> LocalSearchResult:
    """Sequential first-improvement 1-flip search, in place."""
    f0 = state.objective
    flips, passes = state.run_one_flip_sweeps()
    return LocalSearchResult(state, flips=flips, passes=passes, improved=state.objective > f0)


def alg2_exhaustive_rflip(state: SolutionState, r: int) -> LocalSearchResult:
    """Exhaustive first-improvement search over all sets of exactly ``r`` variables.

    Enumeration restarts from the lexicographically first set after every
    accepted move.  Cost is ``C(n, r)`` evaluations per pass; small n only.
    """
    n = state.n
    if not 1 <= r <= n:
        raise ValueError(f"r must be in [1, {n}], got {r}")
    eps = state.instance.eps
    f0 = state.objective
    res = LocalSearchResult(state)
    while True:
        res.passes += 1
        for S in combinations(range(n), r):
            res.evaluations += 1
            if state.delta_set_flip(S) > eps:
                state.apply_set_flip(S)
                res.flips += r
                res.rflip_moves += 1
                break
        else:
            break
    res.improved = state.objective > f0
    return res


def _expired(deadline):
    return deadline is not None and time.monotonic() >= deadline


def alg3_strategy1(
    state: SolutionState,
    r_max: int = 2,
    budget: int | None = None,
    phi_mode: str = "abs",
    deadline: float | None = None,
) -> LocalSearchResult:
    """1-flip search alternating with r-flips drawn from ``D(n)`` (in place).

    For each r in 2..r_max the prefix sets of ``D(n)`` are tried first, then
    all subsets of ``D(n)`` of size 2..r, at most ``budget`` evaluations per
    round (default ``50 * |D(n)|``).  The first improving set is applied and
    the loop restarts from the 1-flip search.
    """
    if r_max < 2:
        raise ValueError(f"r_max must be >= 2, got {r_max}")
    eps = state.instance.eps
    f0 = state.objective
    res = LocalSearchResult(state)
    while True:
        flips, passes = state.run_one_flip_sweeps()
        res.flips += flips
        res.passes += passes
        if _expired(deadline):
            break
        found = None
        for r in range(2, r_max + 1):
            M = compute_M(state.instance, r, phi_mode)
            if M <= 0:
                continue
            ctx = build_Dn(state, M)
            D = ctx.Dn
            if len(D) < 2:
                continue
            limit = budget if budget is not None else 50 * len(D)
            evals = 0
            sets = [fs.indices for fs in candidate_prefix_sets(ctx)]
            for k in range(2, min(r, len(D)) + 1):
                sets.extend(combinations(D.tolist(), k))
            for S in sets:
                if evals >= limit:
                    break
                evals += 1
                if state.delta_set_flip(S) > eps:
                    found = S
                    break
            res.evaluations += evals
            if found is not None:
                break
        if found is None:
            break
        state.apply_set_flip(found)
        res.flips += len(found)
        res.rflip_moves += 1
    res.improved = state.objective > f0
    return res


def _first_improving_pair(state, D, M2, limit):
    """Lexicographic scan of pairs in ``D`` (sorted by ``|E|``) under the sum bound."""
    a = np.abs(state.deriv[D])
    sign = 1 - 2 * state.x[D].astype(state.deriv.dtype)
    g = sign * state.deriv[D]
    sub = state.instance.submatrix(D)
    delta = g[:, None] + g[None, :] + np.outer(sign, sign) * sub
    ok = (a[:, None] + a[None, :]) < M2
    ok &= np.triu(np.ones_like(ok, dtype=bool), 1)
    cand = np.flatnonzero(ok.ravel())[:limit]
    hits = cand[delta.ravel()[cand] > state.instance.eps]
    if len(hits):
        p, q = divmod(int(hits[0]), len(D))
        return (int(D[p]), int(D[q])), len(cand)
    return None, len(cand)


def _grow_sets(state, D, r, M, limit):
    """Depth-first growth of size-r sets over ``D`` pruned by ``sum |E| < M``.

    The objective change is accumulated along the path, so a leaf costs O(r)
    coefficient lookups.
    """
    inst = state.instance
    eps = inst.eps
    a = np.abs(state.deriv[D]).tolist()
    sign = (1 - 2 * state.x[D].astype(np.int64)).tolist()
    g = (np.asarray(sign) * state.deriv[D]).tolist()
    Dl = [int(v) for v in D]
    m = len(Dl)
    evals = 0
    path = []

    def rec(start, total_abs, delta):
        nonlocal evals
        for p in range(start, m - (r - len(path)) + 1):
            s_abs = total_abs + a[p]
            if s_abs >= M:
                break  # sorted ascending: later members only grow the sum
            d = delta + g[p]
            for q in path:
                d += sign[q] * sign[p] * inst.coef(Dl[q], Dl[p])
            path.append(p)
            if len(path) == r:
                evals += 1
                if d > eps:
                    return True
                if evals >= limit:
                    return False
            elif rec(p + 1, s_abs, d):
                return True
            path.pop()
            if evals >= limit:
                return False
        return False

    if rec(0, 0, 0):
        return tuple(sorted(Dl[q] for q in path)), evals
    return None, evals


def alg4_strategy2(
    state: SolutionState,
    r_max: int = 2,
    budget: int | None = None,
    phi_mode: str = "abs",
    abort_below=None,
    deadline: float | None = None,
) -> LocalSearchResult:
    """1-flip search alternating with r-flips grown inside ``D(1)`` (in place).

    r increases one step at a time.  At each r the members of ``D(1)`` are
    sorted by ``|E|`` and sets of size r are grown while their ``|E|`` sum
    stays below ``M(r)``; the first set with a positive change is applied and
    the loop restarts from the 1-flip search.

    With ``abort_below`` set, the search stops as soon as a 1-flip optimum
    is worse than that value (``aborted=True`` in the result).
    """
    if r_max < 1:
        raise ValueError(f"r_max must be >= 1, got {r_max}")
    f0 = state.objective
    res = LocalSearchResult(state)
    while True:
        flips, passes = state.run_one_flip_sweeps()
        res.flips += flips
        res.passes += passes
        if abort_below is not None and state.objective < abort_below:
            res.aborted = True
            break
        if _expired(deadline):
            break
        found = None
        for r in range(2, r_max + 1):
            M = compute_M(state.instance, r, phi_mode)
            if M <= 0:
                continue
            D = build_D1(state, M)
            if len(D) < r:
                continue
            D = D[np.argsort(np.abs(state.deriv[D]), kind="stable")]
            limit = budget if budget is not None else 50 * len(D)
            if r == 2:
                found, evals = _first_improving_pair(state, D, M, limit)
            else:
                found, evals = _grow_sets(state, D, r, M, limit)
            res.evaluations += evals
            if found is not None:
                break
        if found is None:
            break
        state.apply_set_flip(found)
        res.flips += len(found)
        res.rflip_moves += 1
    res.improved = state.objective > f0
    return res
