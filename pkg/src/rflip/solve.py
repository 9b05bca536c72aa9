"""One entry point for every algorithm, used by the CLI and the benchmark."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .core import QuboInstance, SolutionState, evaluate_objective
from .mst2 import Mst2Config, mst2_run
from .search import alg1_one_flip, alg2_exhaustive_rflip, alg3_strategy1, alg4_strategy2
from .tabu import SearchConfig, SearchResult, _Incumbent, alg5_hybrid

ALGORITHMS = ("alg1", "alg2", "alg3", "alg4", "alg5", "mst2")


@dataclass
class MultistartConfig:
    """Random-restart wrapper for the pure local searches (alg1..alg4)."""

    r: int = 2
    time_limit: float = 10.0
    seed: int = 0
    max_starts: int | None = None
    target: float | None = None
    phi_mode: str = "abs"
    budget: int | None = None

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError(f"time_limit must be positive, got {self.time_limit}")
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if self.max_starts is not None and self.max_starts < 1:
            raise ValueError("max_starts must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def _local_search(algorithm, cfg):
    if algorithm == "alg1":
        return alg1_one_flip
    if algorithm == "alg2":
        # an instance smaller than r has no r-sets; use all n variables
        return lambda s: alg2_exhaustive_rflip(s, min(cfg.r, s.n))
    if algorithm == "alg3":
        return lambda s: alg3_strategy1(s, max(cfg.r, 2), cfg.budget, cfg.phi_mode)
    if algorithm == "alg4":
        return lambda s: alg4_strategy2(s, cfg.r, cfg.budget, cfg.phi_mode)
    raise ValueError(f"not a local search: {algorithm!r}")


def multistart(inst: QuboInstance, algorithm: str, config: MultistartConfig) -> SearchResult:
    """Repeat a local search from uniform random starts until a stop condition."""
    ls = _local_search(algorithm, config)
    rng = np.random.default_rng(config.seed)
    t0 = time.monotonic()
    inc = _Incumbent(t0, inst.eps)
    starts = flips = 0
    while True:
        state = SolutionState(inst, rng.integers(0, 2, size=inst.n, dtype=np.int8))
        res = ls(state)
        flips += res.flips
        starts += 1
        inc.offer(state.x, state.objective)
        if time.monotonic() - t0 >= config.time_limit or inc.reached(config.target):
            break
        if config.max_starts is not None and starts >= config.max_starts:
            break
    return SearchResult(
        algorithm=algorithm,
        best_x=inc.x,
        best_f=evaluate_objective(inst, inc.x),
        time_to_best=inc.time,
        total_time=time.monotonic() - t0,
        restarts=starts,
        flips=flips,
        trace=inc.trace,
    )


def make_config(algorithm: str, **params):
    """Build the config object for ``algorithm`` from keyword parameters.

    ``max_restarts`` and ``max_starts`` are accepted interchangeably.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    params = {k: v for k, v in params.items() if v is not None}
    if algorithm == "alg5":
        if "max_starts" in params:
            params["max_restarts"] = params.pop("max_starts")
        return SearchConfig(**params)
    if "max_restarts" in params:
        params["max_starts"] = params.pop("max_restarts")
    if algorithm == "mst2":
        params.pop("r", None)
        return Mst2Config(**params)
    params.pop("tenure", None)
    return MultistartConfig(**params)


def solve(inst: QuboInstance, algorithm: str, config=None, **params) -> SearchResult:
    cfg = config if config is not None else make_config(algorithm, **params)
    if algorithm == "alg5":
        return alg5_hybrid(inst, cfg)
    if algorithm == "mst2":
        return mst2_run(inst, cfg)
    return multistart(inst, algorithm, cfg)
