"""Compiled inner loops: 1-flip sweeps and tabu iterations.

Every kernel receives the instance storage as ``(dense, Q, indptr, indices,
data)``; exactly one of the two layouts is populated.
"""
import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _add_row(E, i, d, dense, Q, indptr, indices, data):
    if dense:
        for j in range(E.shape[0]):
            E[j] += d * Q[i, j]
    else:
        for p in range(indptr[i], indptr[i + 1]):
            E[indices[p]] += d * data[p]


@njit(cache=True, inline="always")
def _coef(i, j, dense, Q, indptr, indices, data):
    if dense:
        return Q[i, j]
    lo = indptr[i]
    hi = indptr[i + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] < j:
            lo = mid + 1
        else:
            hi = mid
    if lo < indptr[i + 1] and indices[lo] == j:
        return data[lo]
    return data[0] * 0


@njit(cache=True)
def one_flip_sweeps(x, E, f, eps, dense, Q, indptr, indices, data, max_passes):
    """Sweep i = 0..n-1 flipping while the gain exceeds ``eps``.

    Stops after a sweep with no accepted flip (or ``max_passes`` sweeps when
    positive).  Returns ``(f, flips, passes)``.
    """
    n = x.shape[0]
    flips = 0
    passes = 0
    while True:
        passes += 1
        changed = False
        for i in range(n):
            d = 1 - 2 * x[i]
            g = d * E[i]
            if g > eps:
                f += g
                x[i] = 1 - x[i]
                _add_row(E, i, d, dense, Q, indptr, indices, data)
                flips += 1
                changed = True
        if not changed or (max_passes > 0 and passes >= max_passes):
            break
    return f, flips, passes


@njit(cache=True)
def tabu_iterations(
    x, E, f, eps, dense, Q, indptr, indices, data,
    tabu_until, it, tenure, max_iters, stall, stall_limit, phase_best,
    best_x, best_E, best_f, pair_pool, ls_on_improve,
):
    """Run up to ``max_iters`` steepest-ascent tabu moves.

    A variable is admissible when ``it >= tabu_until[i]`` or flipping it beats
    ``best_f`` (aspiration).  With ``pair_pool > 0`` the move set also holds
    every pair among the ``pair_pool`` best non-tabu variables.  The loop
    also stops once ``stall`` consecutive moves fail to improve
    ``phase_best``.  On a new global best the assignment is copied to
    ``best_x``; with ``ls_on_improve`` the copy is then driven to a 1-flip
    local optimum.

    Returns ``(f, it, stall, phase_best, best_f, done, improved, flips)``.
    """
    n = x.shape[0]
    flips = 0
    done = 0
    improved = False
    pool = min(pair_pool, n)
    g = np.empty(n, dtype=E.dtype)
    cand = np.empty(max(pool, 1), dtype=np.int64)
    cgain = np.empty(max(pool, 1), dtype=E.dtype)
    while done < max_iters and stall < stall_limit:
        for i in range(n):
            g[i] = E[i] if x[i] == 0 else -E[i]
        # steepest admissible single flip; ties keep the lowest index
        thr = best_f + eps - f
        bi = -1
        bg = g[0]
        for i in range(n):
            gi = g[i]
            if (it >= tabu_until[i] or gi > thr) and (bi < 0 or gi > bg):
                bi = i
                bg = gi
        bj = -1
        if pool > 0:
            ncand = 0
            for i in range(n):
                if it < tabu_until[i]:
                    continue
                gi = g[i]
                if ncand < pool:
                    k = ncand
                    ncand += 1
                elif gi > cgain[ncand - 1]:
                    k = ncand - 1
                else:
                    continue
                while k > 0 and cgain[k - 1] < gi:
                    cand[k] = cand[k - 1]
                    cgain[k] = cgain[k - 1]
                    k -= 1
                cand[k] = i
                cgain[k] = gi
            for a in range(ncand):
                ia = cand[a]
                da = 1 - 2 * x[ia]
                for b in range(a + 1, ncand):
                    ib = cand[b]
                    db = 1 - 2 * x[ib]
                    pg = cgain[a] + cgain[b] + da * db * _coef(ia, ib, dense, Q, indptr, indices, data)
                    if bi < 0 or pg > bg:
                        bi = ia
                        bj = ib
                        bg = pg
        if bi < 0:
            # everything tabu and nothing aspirates: release the oldest
            bi = 0
            for i in range(1, n):
                if tabu_until[i] < tabu_until[bi]:
                    bi = i
            bg = g[bi]

        d = 1 - 2 * x[bi]
        x[bi] = 1 - x[bi]
        _add_row(E, bi, d, dense, Q, indptr, indices, data)
        tabu_until[bi] = it + tenure + 1
        flips += 1
        if bj >= 0:
            d = 1 - 2 * x[bj]
            x[bj] = 1 - x[bj]
            _add_row(E, bj, d, dense, Q, indptr, indices, data)
            tabu_until[bj] = it + tenure + 1
            flips += 1
        f += bg
        it += 1
        done += 1

        if f > phase_best + eps:
            phase_best = f
            stall = 0
        else:
            stall += 1
        if f > best_f + eps:
            best_f = f
            improved = True
            best_x[:] = x
            if ls_on_improve:
                best_E[:] = E
                best_f, _, _ = one_flip_sweeps(
                    best_x, best_E, best_f, eps, dense, Q, indptr, indices, data, -1
                )
    return f, it, stall, phase_best, best_f, done, improved, flips
