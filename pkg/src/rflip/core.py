"""QUBO instances and incrementally maintained solution states.

The objective is maximised::

    f(x) = sum_i q_i x_i + sum_{i<j} q_ij x_i x_j,   x in {0, 1}^n

and the derivative ("gain") of variable ``i`` is::

    E_i(x) = q_i + sum_{j != i} q_ij x_j

so flipping ``i`` changes ``f`` by ``(1 - 2 x_i) * E_i``.  All indices in the
Python API are 0-based; only the text file format is 1-based.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

from . import _kernels

#: Density above which an instance keeps a dense symmetric coefficient matrix.
DENSE_THRESHOLD = 0.5
#: Strict-improvement threshold for real-valued instances.
REAL_EPS = 1e-9


class DimensionError(ValueError):
    """Raised when a vector does not match the instance size."""


class InvalidFlipSetError(ValueError):
    """Raised for empty, duplicated or out-of-range flip sets."""


def _numeric_dtype(values) -> np.dtype:
    # any non-integer-typed value (even 3.0) makes the instance real-valued
    for v in values:
        if not isinstance(v, (int, np.integer, bool, np.bool_)):
            return np.dtype(np.float64)
    return np.dtype(np.int64)


class QuboInstance:
    """Immutable QUBO instance with linear terms and upper-triangular pairs.

    Parameters
    ----------
    n : int
        Number of binary variables.
    linear : array-like of length n, optional
        Linear coefficients ``q_i`` (default all zero).
    pairs : mapping ``(i, j) -> q_ij`` or iterable of ``(i, j, q_ij)``
        Off-diagonal coefficients, 0-based.  ``(j, i)`` is normalised to
        ``(i, j)``; zero coefficients are dropped.
    name : str
    dtype : numpy dtype, optional
        ``int64`` (exact mode) or ``float64``.  Inferred from the values when
        omitted.
    storage : {"auto", "dense", "sparse"}
        ``"auto"`` picks dense rows when density exceeds ``DENSE_THRESHOLD``.
    """

    def __init__(self, n, linear=None, pairs=None, name="", dtype=None, storage="auto"):
        n = int(n)
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        if storage not in ("auto", "dense", "sparse"):
            raise ValueError(f"unknown storage mode {storage!r}")

        if pairs is None:
            triples = []
        elif isinstance(pairs, Mapping):
            triples = [(i, j, c) for (i, j), c in pairs.items()]
        else:
            triples = [tuple(t) for t in pairs]

        lin_in = np.zeros(n, dtype=np.int64) if linear is None else np.asarray(linear)
        if lin_in.shape != (n,):
            raise DimensionError(f"linear has shape {lin_in.shape}, expected ({n},)")

        if dtype is None:
            if lin_in.dtype.kind == "f" or _numeric_dtype(c for _, _, c in triples) == np.float64:
                dtype = np.float64
            elif lin_in.dtype.kind in "iub":
                dtype = np.int64
            else:
                dtype = np.float64
        dtype = np.dtype(dtype)
        if dtype not in (np.dtype(np.int64), np.dtype(np.float64)):
            raise ValueError(f"dtype must be int64 or float64, got {dtype}")

        seen = {}
        for i, j, c in triples:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-pair ({i}, {i}): diagonal terms belong in `linear`")
            if not (0 <= i < n and 0 <= j < n):
                raise IndexError(f"pair ({i}, {j}) out of range for n={n}")
            if i > j:
                i, j = j, i
            if (i, j) in seen:
                raise ValueError(f"duplicate pair ({i}, {j})")
            seen[(i, j)] = c

        keys = sorted(k for k, c in seen.items() if c != 0)
        rows = np.array([k[0] for k in keys], dtype=np.int64)
        cols = np.array([k[1] for k in keys], dtype=np.int64)
        vals = np.array([seen[k] for k in keys], dtype=dtype)
        if dtype == np.int64 and len(keys):
            raw = np.array([seen[k] for k in keys], dtype=np.float64)
            if not np.array_equal(raw, vals.astype(np.float64)):
                raise ValueError("non-integral coefficient in an int64 instance")

        self._n = n
        self._name = str(name)
        self._dtype = dtype
        self._linear = np.array(lin_in, dtype=dtype)
        self._rows, self._cols, self._vals = rows, cols, vals
        for a in (self._linear, rows, cols, vals):
            a.flags.writeable = False

        total = comb(n, 2)
        self._density = len(keys) / total if total else 0.0
        dense = self._density > DENSE_THRESHOLD if storage == "auto" else storage == "dense"
        self._build_storage(dense)

    @classmethod
    def _from_arrays(cls, n, linear, rows, cols, vals, name="", storage="auto"):
        """Trusted fast path: rows < cols, sorted, unique, nonzero."""
        self = cls.__new__(cls)
        dtype = np.dtype(vals.dtype if len(vals) else np.asarray(linear).dtype)
        if dtype.kind in "iub":
            dtype = np.dtype(np.int64)
        else:
            dtype = np.dtype(np.float64)
        self._n = int(n)
        self._name = str(name)
        self._dtype = dtype
        self._linear = np.array(linear, dtype=dtype)
        self._rows = np.asarray(rows, dtype=np.int64)
        self._cols = np.asarray(cols, dtype=np.int64)
        self._vals = np.asarray(vals, dtype=dtype)
        for a in (self._linear, self._rows, self._cols, self._vals):
            a.flags.writeable = False
        total = comb(self._n, 2)
        self._density = len(self._vals) / total if total else 0.0
        dense = self._density > DENSE_THRESHOLD if storage == "auto" else storage == "dense"
        self._build_storage(dense)
        return self

    def _build_storage(self, dense):
        n, rows, cols, vals = self._n, self._rows, self._cols, self._vals
        self._dense = dense
        self._csr = None
        if dense:
            Q = np.zeros((n, n), dtype=self._dtype)
            Q[rows, cols] = vals
            Q[cols, rows] = vals
            Q.flags.writeable = False
            self._Q = Q
            empty_i = np.zeros(1, dtype=np.int64)
            self._indptr, self._indices = empty_i, empty_i
            self._data = np.zeros(1, dtype=self._dtype)
        else:
            self._Q = np.zeros((0, 0), dtype=self._dtype)
            # symmetric CSR, each row's neighbours sorted ascending
            r = np.concatenate([rows, cols])
            c = np.concatenate([cols, rows])
            v = np.concatenate([vals, vals])
            order = np.lexsort((c, r))
            r, c, v = r[order], c[order], v[order]
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.add.at(indptr, r + 1, 1)
            self._indptr = np.cumsum(indptr)
            if len(c) == 0:
                # kernels read data[0] for a typed zero; never indexed via indptr
                c = np.zeros(1, dtype=np.int64)
                v = np.zeros(1, dtype=self._dtype)
            self._indices = np.ascontiguousarray(c, dtype=np.int64)
            self._data = np.ascontiguousarray(v, dtype=self._dtype)
            for a in (self._indptr, self._indices, self._data):
                a.flags.writeable = False

    # -- read-only views -------------------------------------------------
    @property
    def n(self) -> int:
        return self._n

    @property
    def name(self) -> str:
        return self._name

    @property
    def dtype(self) -> np.dtype:
        return self._dtype

    @property
    def linear(self) -> np.ndarray:
        return self._linear

    @property
    def pairs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stored pairs as ``(rows, cols, values)`` sorted by (i, j), i < j."""
        return self._rows, self._cols, self._vals

    @property
    def nnz(self) -> int:
        return len(self._vals)

    @property
    def density(self) -> float:
        return self._density

    @property
    def is_dense(self) -> bool:
        return self._dense

    @property
    def is_integer(self) -> bool:
        return self._dtype == np.int64

    @property
    def eps(self):
        """Minimum gain that counts as a strict improvement."""
        return 0 if self.is_integer else REAL_EPS

    @property
    def phi(self):
        """Largest stored pair coefficient (0 when there are no pairs)."""
        return self._vals.max().item() if len(self._vals) else 0

    @property
    def phi_abs(self):
        """Largest stored pair coefficient in absolute value."""
        return np.abs(self._vals).max().item() if len(self._vals) else 0

    def coef(self, i: int, j: int):
        """``q_ij`` accessed symmetrically; 0 for the diagonal or absent pairs."""
        if i == j:
            return self._dtype.type(0)
        if self._dense:
            return self._Q[i, j]
        lo, hi = self._indptr[i], self._indptr[i + 1]
        p = lo + np.searchsorted(self._indices[lo:hi], j)
        if p < hi and self._indices[p] == j:
            return self._data[p]
        return self._dtype.type(0)

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Indices and coefficients of the nonzero pairs touching ``i``."""
        if self._dense:
            row = self._Q[i]
            idx = np.flatnonzero(row)
            return idx, row[idx]
        lo, hi = self._indptr[i], self._indptr[i + 1]
        return self._indices[lo:hi], self._data[lo:hi]

    def add_row(self, out: np.ndarray, i: int, scale) -> None:
        """``out[j] += scale * q_ij`` for every j (in place)."""
        if self._dense:
            out += scale * self._Q[i]
        else:
            lo, hi = self._indptr[i], self._indptr[i + 1]
            out[self._indices[lo:hi]] += scale * self._data[lo:hi]

    def submatrix(self, idx) -> np.ndarray:
        """Dense symmetric block ``Q[idx][:, idx]`` with zero diagonal."""
        idx = np.asarray(idx, dtype=np.int64)
        if self._dense:
            return self._Q[np.ix_(idx, idx)]
        m = len(idx)
        out = np.zeros((m, m), dtype=self._dtype)
        pos = {int(v): k for k, v in enumerate(idx)}
        for a, i in enumerate(idx):
            nb, vals = self.neighbors(int(i))
            for j, v in zip(nb, vals):
                b = pos.get(int(j))
                if b is not None:
                    out[a, b] = v
        return out

    def to_dense(self) -> np.ndarray:
        """Symmetric pair matrix with zero diagonal (a fresh array)."""
        Q = np.zeros((self._n, self._n), dtype=self._dtype)
        Q[self._rows, self._cols] = self._vals
        Q[self._cols, self._rows] = self._vals
        return Q

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """``Q x`` for the symmetric pair matrix (exact for integer data)."""
        xl = np.asarray(x, dtype=self._dtype)
        if self._dense:
            return self._Q @ xl
        if self._csr is None:
            n = self._n
            nnz = int(self._indptr[-1])
            self._csr = sparse.csr_matrix(
                (self._data[:nnz], self._indices[:nnz], self._indptr), shape=(n, n)
            )
        return np.asarray(self._csr @ xl, dtype=self._dtype)

    def kernel_args(self):
        return self._dense, self._Q, self._indptr, self._indices, self._data

    def negated(self) -> "QuboInstance":
        """Instance with every coefficient negated (minimisation input)."""
        return QuboInstance._from_arrays(
            self._n, -self._linear, self._rows, self._cols, -self._vals, name=self._name
        )

    def __eq__(self, other):
        if not isinstance(other, QuboInstance):
            return NotImplemented
        return (
            self._n == other._n
            and self._dtype == other._dtype
            and np.array_equal(self._linear, other._linear)
            and np.array_equal(self._rows, other._rows)
            and np.array_equal(self._cols, other._cols)
            and np.array_equal(self._vals, other._vals)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"QuboInstance(name={self._name!r}, n={self._n}, nnz={self.nnz}, "
            f"density={self._density:.4f}, dtype={self._dtype}, "
            f"storage={'dense' if self._dense else 'sparse'})"
        )


@dataclass(frozen=True)
class FlipSet:
    """A set of distinct variable indices flipped together (strictly increasing)."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise InvalidFlipSetError("flip set must not be empty")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidFlipSetError(f"indices must be strictly increasing: {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices: Iterable[int]) -> "FlipSet":
        idx = [int(i) for i in indices]
        if len(set(idx)) != len(idx):
            raise InvalidFlipSetError(f"duplicate indices in {idx}")
        return cls(tuple(sorted(idx)))

    @property
    def r(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)


def as_flipset(s, n: int) -> FlipSet:
    fs = s if isinstance(s, FlipSet) else FlipSet.of(s)
    if fs.indices[0] < 0 or fs.indices[-1] >= n:
        raise InvalidFlipSetError(f"flip set {fs.indices} out of range for n={n}")
    return fs


def _check_x(inst: QuboInstance, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (inst.n,):
        raise DimensionError(f"x has shape {x.shape}, expected ({inst.n},)")
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("x must be binary")
    return x.astype(np.int8)


def evaluate_objective(inst: QuboInstance, x):
    """``f(x)`` from scratch."""
    x = _check_x(inst, x)
    rows, cols, vals = inst.pairs
    xl = x.astype(inst.dtype)
    f = xl @ inst.linear + np.sum(vals * xl[rows] * xl[cols])
    return f.item()


def compute_derivatives(inst: QuboInstance, x) -> np.ndarray:
    """Derivative vector ``E`` from scratch."""
    x = _check_x(inst, x)
    return inst.linear + inst.matvec(x)


def _scratch_state(inst: QuboInstance, x):
    # f = x.q + x.Qx / 2 since Q holds every pair twice
    Qx = inst.matvec(x)
    xl = x.astype(inst.dtype)
    quad = xl @ Qx
    f = xl @ inst.linear + (quad // 2 if inst.is_integer else quad / 2)
    return inst.linear + Qx, f.item()


class SolutionState:
    """Binary assignment with its derivative vector and cached objective.

    ``deriv`` and ``objective`` are kept equal to their from-scratch values by
    every ``apply_*`` method.  The derivative of a flipped variable is left
    untouched, which is exact since ``E_i`` does not depend on ``x_i``.
    """

    __slots__ = ("instance", "x", "deriv", "objective")

    def __init__(self, instance: QuboInstance, x=None, *, _deriv=None, _objective=None):
        self.instance = instance
        if x is None:
            x = np.zeros(instance.n, dtype=np.int8)
        self.x = _check_x(instance, x).copy()
        if _deriv is None:
            self.deriv, self.objective = _scratch_state(instance, self.x)
        else:
            self.deriv = _deriv
            self.objective = _objective

    def copy(self) -> "SolutionState":
        return SolutionState(
            self.instance, self.x, _deriv=self.deriv.copy(), _objective=self.objective
        )

    @property
    def n(self) -> int:
        return self.instance.n

    def _check_index(self, i):
        if not 0 <= i < self.instance.n:
            raise IndexError(f"index {i} out of range for n={self.instance.n}")

    def gains(self) -> np.ndarray:
        """Objective change of every single flip."""
        return (1 - 2 * self.x.astype(self.deriv.dtype)) * self.deriv

    def delta_one_flip(self, i: int):
        self._check_index(i)
        return ((1 - 2 * int(self.x[i])) * self.deriv[i]).item()

    def apply_one_flip(self, i: int) -> "SolutionState":
        self._check_index(i)
        d = 1 - 2 * int(self.x[i])
        self.objective += (d * self.deriv[i]).item()
        self.x[i] ^= 1
        self.instance.add_row(self.deriv, i, d)
        return self

    def delta_set_flip(self, s):
        fs = as_flipset(s, self.instance.n)
        idx = fs.indices
        if len(idx) == 1:
            return self.delta_one_flip(idx[0])
        inst = self.instance
        d = [1 - 2 * int(self.x[i]) for i in idx]
        total = sum(d[a] * self.deriv[i] for a, i in enumerate(idx))
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                total += d[a] * d[b] * inst.coef(idx[a], idx[b])
        return total.item() if hasattr(total, "item") else total

    def apply_set_flip(self, s) -> "SolutionState":
        fs = as_flipset(s, self.instance.n)
        self.objective += self.delta_set_flip(fs)
        for i in fs.indices:
            d = 1 - 2 * int(self.x[i])
            self.x[i] ^= 1
            self.instance.add_row(self.deriv, i, d)
        return self

    def is_one_flip_local_opt(self) -> bool:
        eps = self.instance.eps
        return bool(np.all(self.gains() <= eps))

    def run_one_flip_sweeps(self, max_passes: int = -1) -> tuple[int, int]:
        """In-place sequential first-improvement 1-flip search (compiled)."""
        f, flips, passes = _kernels.one_flip_sweeps(
            self.x, self.deriv, self.objective, self.instance.eps,
            *self.instance.kernel_args(), max_passes,
        )
        self.objective = f.item() if hasattr(f, "item") else f
        return int(flips), int(passes)

    def __repr__(self):
        return f"SolutionState(n={self.n}, objective={self.objective})"


def delta_one_flip(state: SolutionState, i: int):
    return state.delta_one_flip(i)


def apply_one_flip(state: SolutionState, i: int) -> SolutionState:
    return state.apply_one_flip(i)


def delta_set_flip(state: SolutionState, s):
    return state.delta_set_flip(s)


def apply_set_flip(state: SolutionState, s) -> SolutionState:
    return state.apply_set_flip(s)


def is_one_flip_local_opt(state: SolutionState) -> bool:
    return state.is_one_flip_local_opt()
