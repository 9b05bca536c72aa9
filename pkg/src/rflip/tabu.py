"""Hybrid r-flip local search embedded in a simple tabu search.

Each restart runs the Strategy-2 local search (abandoned early when its
1-flip optimum is already worse than the best known solution), then a tabu
phase of steepest admissible 1-flip moves (plus 2-flip moves when ``r >= 2``),
then perturbs the incumbent by Destruction/Construction or randChange.
The time limit is checked before every tabu phase, and inside a phase every
``n`` iterations.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .core import QuboInstance, SolutionState, evaluate_objective
from .search import PHI_MODES, alg4_strategy2


@dataclass
class SearchConfig:
    r: int = 1
    time_limit: float = 10.0
    seed: int = 0
    tenure: int = 100
    destruction_fraction: float = 0.25
    rand_change_p: float = 0.1
    stall_factor: int = 20
    pair_pool: int = 8
    max_restarts: int | None = None
    target: float | None = None
    phi_mode: str = "abs"
    budget: int | None = None

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError(f"time_limit must be positive, got {self.time_limit}")
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if self.tenure < 1:
            raise ValueError(f"tenure must be >= 1, got {self.tenure}")
        if not 0 < self.destruction_fraction <= 1:
            raise ValueError("destruction_fraction must be in (0, 1]")
        if not 0 <= self.rand_change_p <= 1:
            raise ValueError("rand_change_p must be in [0, 1]")
        if self.phi_mode not in PHI_MODES:
            raise ValueError(f"phi_mode must be one of {PHI_MODES}")
        if self.max_restarts is not None and self.max_restarts < 1:
            raise ValueError("max_restarts must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SearchResult:
    algorithm: str
    best_x: np.ndarray
    best_f: float
    time_to_best: float
    total_time: float
    restarts: int
    flips: int
    trace: list = field(default_factory=list, repr=False)
    stats: dict = field(default_factory=dict)

    def to_dict(self, include_x: bool = True) -> dict:
        """JSON-ready dict; wall-clock values live under ``"timing"`` only."""
        out = {
            "algorithm": self.algorithm,
            "best_f": self.best_f,
            "restarts": self.restarts,
            "flips": self.flips,
            "stats": self.stats,
            "timing": {
                "time_to_best_s": self.time_to_best,
                "total_time_s": self.total_time,
                "trace": [[t, f] for t, f in self.trace],
            },
        }
        if include_x:
            out["best_x"] = [int(v) for v in self.best_x]
        return out


class _Incumbent:
    """Best-so-far tracker with improvement timestamps."""

    def __init__(self, t0, eps):
        self.t0 = t0
        self.eps = eps
        self.x = None
        self.f = -math.inf
        self.time = 0.0
        self.trace = []

    def offer(self, x, f) -> bool:
        if self.x is None or f > self.f + self.eps:
            self.x = np.array(x, dtype=np.int8)
            self.f = f
            self.time = time.monotonic() - self.t0
            self.trace.append((self.time, f))
            return True
        return False

    def reached(self, target) -> bool:
        return target is not None and self.x is not None and self.f >= target


def effective_tenure(tenure: int, n: int) -> int:
    """Tenure capped at ``n // 10`` (at least 1) for small instances."""
    return max(1, min(tenure, n // 10))


def destruction(x, fraction: float, rng) -> np.ndarray:
    """Unassign ``ceil(fraction * n)`` random variables (marked as -1)."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    out = np.array(x, dtype=np.int8)
    n = len(out)
    k = min(n, math.ceil(fraction * n - 1e-9))
    out[rng.choice(n, size=k, replace=False)] = -1
    return out


def construction(x_partial, inst: QuboInstance) -> SolutionState:
    """Greedily assign the marked (-1) variables in ascending index order.

    Marked variables start at 0; each is then set to 1 exactly when its
    current derivative is positive.
    """
    xp = np.asarray(x_partial)
    marked = np.flatnonzero(xp < 0)
    state = SolutionState(inst, np.where(xp < 0, 0, xp))
    for i in marked:
        if state.deriv[i] > 0:
            state.apply_one_flip(int(i))
    return state


def rand_change(x, p: float, rng) -> np.ndarray:
    """Toggle each variable independently with probability ``p``."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    out = np.array(x, dtype=np.int8)
    mask = rng.random(len(out)) < p
    out[mask] ^= 1
    return out


def _tabu_phase(state, cfg, inc, deadline, tenure, pair_pool):
    """Run one tabu phase from ``state`` (modified in place); returns flips."""
    inst = state.instance
    n = inst.n
    eps = inst.eps
    tabu_until = np.zeros(n, dtype=np.int64)
    best_x = np.array(inc.x, dtype=np.int8)
    best_E = np.zeros_like(state.deriv)
    it = 0
    stall = 0
    phase_best = state.objective
    stall_limit = cfg.stall_factor * n
    flips = 0
    while stall < stall_limit:
        f, it, stall, phase_best, best_f, done, improved, fl = _kernels.tabu_iterations(
            state.x, state.deriv, state.objective, eps, *inst.kernel_args(),
            tabu_until, it, tenure, n, stall, stall_limit, phase_best,
            best_x, best_E, inc.f, pair_pool, False,
        )
        state.objective = f.item() if hasattr(f, "item") else f
        flips += fl
        if improved:
            inc.offer(best_x, best_f.item() if hasattr(best_f, "item") else best_f)
        if time.monotonic() >= deadline or inc.reached(cfg.target):
            break
    return flips


def alg5_hybrid(inst: QuboInstance, config: SearchConfig | None = None, **overrides) -> SearchResult:
    """Time-limited hybrid search; returns the best solution found.

    Deterministic for a given seed when the run ends through ``max_restarts``
    or ``target`` rather than the clock.
    """
    cfg = config if config is not None else SearchConfig()
    if overrides:
        cfg = SearchConfig(**{**cfg.to_dict(), **overrides})
    rng = np.random.default_rng(cfg.seed)
    t0 = time.monotonic()
    deadline = t0 + cfg.time_limit
    n = inst.n
    inc = _Incumbent(t0, inst.eps)
    tenure = effective_tenure(cfg.tenure, n)
    pair_pool = cfg.pair_pool if cfg.r >= 2 else 0
    restarts = flips = aborted = rflip_moves = 0

    x = rng.integers(0, 2, size=n, dtype=np.int8)
    while True:
        state = SolutionState(inst, x)
        ls = alg4_strategy2(
            state, r_max=cfg.r, budget=cfg.budget, phi_mode=cfg.phi_mode,
            abort_below=inc.f if inc.x is not None else None, deadline=deadline,
        )
        flips += ls.flips
        rflip_moves += ls.rflip_moves
        aborted += ls.aborted
        inc.offer(state.x, state.objective)

        if time.monotonic() >= deadline or inc.reached(cfg.target):
            break
        if cfg.max_restarts is not None and restarts >= cfg.max_restarts:
            break
        flips += _tabu_phase(state, cfg, inc, deadline, tenure, pair_pool)
        restarts += 1

        if rng.random() < 0.5:
            x = construction(destruction(inc.x, cfg.destruction_fraction, rng), inst).x
        else:
            x = rand_change(inc.x, cfg.rand_change_p, rng)

    best_f = evaluate_objective(inst, inc.x)
    if best_f != inc.f and not (not inst.is_integer and abs(best_f - inc.f) < 1e-6):
        raise RuntimeError(f"incumbent drift: cached {inc.f}, recomputed {best_f}")
    return SearchResult(
        algorithm=f"alg5_r{cfg.r}",
        best_x=inc.x,
        best_f=best_f,
        time_to_best=inc.time,
        total_time=time.monotonic() - t0,
        restarts=restarts,
        flips=flips,
        trace=inc.trace,
        stats={"aborted_local_searches": aborted, "rflip_moves": rflip_moves, "tenure": tenure},
    )
