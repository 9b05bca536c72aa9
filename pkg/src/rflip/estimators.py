"""scikit-learn style wrappers around the solvers.

``fit(Q)`` solves the QUBO given by ``Q`` (anything ``check_qubo`` accepts)
and stores ``x_``, ``objective_`` and ``result_``.  ``score(Q)`` returns the
objective of the fitted assignment on ``Q``.  Hyper-parameters go through the
constructor, so ``get_params``/``set_params``/``clone`` work as usual.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import SolutionState, evaluate_objective
from .search import alg1_one_flip, alg2_exhaustive_rflip, alg3_strategy1, alg4_strategy2
from .solve import solve
from .validation import check_binary_vector, check_qubo


class _QuboSolver(BaseEstimator):
    def fit(self, Q, y=None):
        inst = check_qubo(Q)
        self._solve(inst)
        self.n_features_in_ = inst.n
        return self

    def fit_predict(self, Q, y=None) -> np.ndarray:
        return self.fit(Q).x_

    def predict(self, Q=None) -> np.ndarray:
        check_is_fitted(self, "x_")
        return self.x_.copy()

    def score(self, Q, y=None) -> float:
        check_is_fitted(self, "x_")
        inst = check_qubo(Q)
        return evaluate_objective(inst, check_binary_vector(self.x_, inst.n))

    def _solve(self, inst):
        raise NotImplementedError


class _LocalSearch(_QuboSolver):
    """Single descent from ``x0`` (or a seeded random start)."""

    def _start(self, inst):
        if self.x0 is not None:
            return SolutionState(inst, check_binary_vector(self.x0, inst.n))
        rng = np.random.default_rng(self.seed)
        return SolutionState(inst, rng.integers(0, 2, size=inst.n, dtype=np.int8))

    def _solve(self, inst):
        state = self._start(inst)
        self.result_ = self._descend(state)
        self.x_ = state.x.copy()
        self.objective_ = state.objective


class OneFlipSearch(_LocalSearch):
    def __init__(self, x0=None, seed=0):
        self.x0 = x0
        self.seed = seed

    def _descend(self, state):
        return alg1_one_flip(state)


class ExhaustiveRFlipSearch(_LocalSearch):
    def __init__(self, r=2, x0=None, seed=0):
        self.r = r
        self.x0 = x0
        self.seed = seed

    def _descend(self, state):
        return alg2_exhaustive_rflip(state, self.r)


class Strategy1Search(_LocalSearch):
    def __init__(self, r_max=2, budget=None, phi_mode="abs", x0=None, seed=0):
        self.r_max = r_max
        self.budget = budget
        self.phi_mode = phi_mode
        self.x0 = x0
        self.seed = seed

    def _descend(self, state):
        return alg3_strategy1(state, self.r_max, self.budget, self.phi_mode)


class Strategy2Search(_LocalSearch):
    def __init__(self, r_max=2, budget=None, phi_mode="abs", x0=None, seed=0):
        self.r_max = r_max
        self.budget = budget
        self.phi_mode = phi_mode
        self.x0 = x0
        self.seed = seed

    def _descend(self, state):
        return alg4_strategy2(state, self.r_max, self.budget, self.phi_mode)


class HybridTabuSearch(_QuboSolver):
    """Time-limited hybrid r-flip / tabu search."""

    def __init__(self, r=1, time_limit=10.0, seed=0, tenure=100, max_restarts=None, target=None,
                 phi_mode="abs"):
        self.r = r
        self.time_limit = time_limit
        self.seed = seed
        self.tenure = tenure
        self.max_restarts = max_restarts
        self.target = target
        self.phi_mode = phi_mode

    def _solve(self, inst):
        self.result_ = solve(inst, "alg5", **self.get_params())
        self.x_ = self.result_.best_x.copy()
        self.objective_ = self.result_.best_f


class MST2Search(_QuboSolver):
    """Multistart tabu baseline; the time limit is only checked between phases."""

    def __init__(self, time_limit=10.0, seed=0, tenure=100, initial_iters_factor=25000,
                 subsequent_iters_factor=10000, max_starts=None, target=None):
        self.time_limit = time_limit
        self.seed = seed
        self.tenure = tenure
        self.initial_iters_factor = initial_iters_factor
        self.subsequent_iters_factor = subsequent_iters_factor
        self.max_starts = max_starts
        self.target = target

    def _solve(self, inst):
        self.result_ = solve(inst, "mst2", **self.get_params())
        self.x_ = self.result_.best_x.copy()
        self.objective_ = self.result_.best_f
