"""Input coercion for the estimator wrappers."""
from __future__ import annotations

from collections.abc import Mapping

import numpy as np
from scipy import sparse

from .core import DimensionError, QuboInstance


def check_qubo(Q, name: str = "") -> QuboInstance:
    """Coerce ``Q`` into a ``QuboInstance``.

    Accepts a ``QuboInstance`` (returned unchanged), a square dense array or
    scipy sparse matrix read as ``x^T A x`` (diagonal -> linear terms,
    ``q_ij = A_ij + A_ji`` for ``i < j``), or a mapping ``{(i, j): c}`` with
    ``(i, i)`` keys as linear terms.
    """
    if isinstance(Q, QuboInstance):
        return Q
    if isinstance(Q, Mapping):
        return _from_mapping(Q, name)
    if sparse.issparse(Q):
        A = sparse.coo_matrix(Q)
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"Q must be square, got shape {A.shape}")
        n = A.shape[0]
        linear = np.zeros(n, dtype=A.dtype)
        np.add.at(linear, A.row[A.row == A.col], A.data[A.row == A.col])
        U = sparse.triu(A, k=1) + sparse.tril(A, k=-1).T
        U = sparse.coo_matrix(U)
        U.sum_duplicates()
        pairs = {(int(i), int(j)): v.item() for i, j, v in zip(U.row, U.col, U.data) if v != 0}
        return QuboInstance(n, _as_numbers(linear), pairs, name=name)
    A = np.asarray(Q)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"Q must be a square 2-D array, got shape {A.shape}")
    if not (np.issubdtype(A.dtype, np.integer) or np.issubdtype(A.dtype, np.floating)):
        raise TypeError(f"Q must be numeric, got dtype {A.dtype}")
    if not np.all(np.isfinite(A)):
        raise ValueError("Q contains non-finite values")
    n = A.shape[0]
    S = np.triu(A, 1) + np.tril(A, -1).T
    iu, ju = np.nonzero(S)
    pairs = {(int(i), int(j)): S[i, j].item() for i, j in zip(iu, ju)}
    return QuboInstance(n, _as_numbers(np.diag(A)), pairs, name=name)


def _as_numbers(arr):
    return [v.item() for v in np.asarray(arr)]


def _from_mapping(Q, name):
    linear = {}
    pairs = {}
    n = 0
    for (i, j), c in Q.items():
        i, j = int(i), int(j)
        if i < 0 or j < 0:
            raise IndexError(f"negative index in key {(i, j)}")
        n = max(n, i + 1, j + 1)
        if i == j:
            linear[i] = linear.get(i, 0) + c
        else:
            key = (min(i, j), max(i, j))
            pairs[key] = pairs.get(key, 0) + c
    lin = [linear.get(i, 0) for i in range(n)]
    return QuboInstance(n, lin, {k: v for k, v in pairs.items() if v != 0}, name=name)


def check_binary_vector(x, n: int) -> np.ndarray:
    """Return ``x`` as an int8 array of length ``n`` with entries in {0, 1}."""
    arr = np.asarray(x)
    if arr.shape != (n,):
        raise DimensionError(f"expected a vector of length {n}, got shape {arr.shape}")
    if arr.dtype == bool:
        return arr.astype(np.int8)
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("x must contain only 0 and 1")
    return arr.astype(np.int8)
