"""Summary statistics and nonparametric tests for benchmark tables.

Matrices are ``blocks x treatments`` (instances in rows, algorithms in
columns).  Pairwise results are symmetric ``k x k`` arrays with a unit
diagonal.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np
from scipy import stats as st

#: RSD values below this are reported as exactly 0.
RSD_FLOOR = 5.0e-4
#: Largest sample (after dropping zero differences) given the exact null distribution.
WILCOXON_EXACT_MAX_N = 25


class StatsInputError(ValueError):
    """Input shape unsuitable for the requested test."""


def compute_rsd(values):
    """Relative standard deviation ``100 * sd / |mean|`` with the n-1 divisor.

    Returns ``None`` when the mean is zero (RSD undefined).  A single value has
    RSD 0.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise StatsInputError("compute_rsd needs at least one value")
    mu = v.mean()
    if mu == 0:
        return None
    sd = v.std(ddof=1) if v.size > 1 else 0.0
    rsd = 100.0 * sd / abs(mu)
    return 0.0 if rsd < RSD_FLOOR else float(rsd)


def _check_matrix(matrix):
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise StatsInputError(f"expected a 2-D blocks x treatments matrix, got shape {m.shape}")
    n, k = m.shape
    if n < 2 or k < 2:
        raise StatsInputError(f"need >= 2 blocks and >= 2 treatments, got {n} x {k}")
    if not np.all(np.isfinite(m)):
        raise StatsInputError("matrix contains non-finite values")
    return m


def within_block_ranks(matrix) -> np.ndarray:
    """Average ranks (1 = smallest) inside each block."""
    m = _check_matrix(matrix)
    return np.vstack([st.rankdata(row) for row in m])


def friedman_test(matrix):
    """Friedman chi-square with the tie correction.

    Returns ``(statistic, df, p_value)``.  Fully tied data give ``(0, df, 1)``.
    """
    m = _check_matrix(matrix)
    n, k = m.shape
    ranks = within_block_ranks(m)
    R = ranks.sum(axis=0)
    chi2 = 12.0 / (n * k * (k + 1)) * np.sum(R**2) - 3.0 * n * (k + 1)
    ties = 0.0
    for row in m:
        _, counts = np.unique(row, return_counts=True)
        ties += np.sum(counts**3 - counts)
    denom = 1.0 - ties / (n * k * (k * k - 1))
    df = k - 1
    if denom <= 1e-12:
        return 0.0, df, 1.0
    chi2 = max(chi2 / denom, 0.0)
    return float(chi2), df, float(st.chi2.sf(chi2, df))


def nemenyi_posthoc(matrix) -> np.ndarray:
    """Pairwise Nemenyi p-values from mean within-block ranks.

    ``q = |Rbar_i - Rbar_j| / sqrt(k (k + 1) / (6 n))`` is referred to the
    studentized range distribution with ``k`` groups and infinite df
    (scaled by sqrt(2)).
    """
    m = _check_matrix(matrix)
    n, k = m.shape
    mean_ranks = within_block_ranks(m).mean(axis=0)
    se = np.sqrt(k * (k + 1) / (6.0 * n))
    p = np.ones((k, k))
    for i, j in combinations(range(k), 2):
        q = abs(mean_ranks[i] - mean_ranks[j]) / se
        pv = 1.0 if q == 0 else float(st.studentized_range.sf(q * np.sqrt(2.0), k, np.inf))
        p[i, j] = p[j, i] = min(max(pv, 0.0), 1.0)
    return p


def _signed_rank_null_counts(n: int) -> np.ndarray:
    """Number of subsets of {1..n} with each rank sum 0..n(n+1)/2."""
    top = n * (n + 1) // 2
    counts = np.zeros(top + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in range(1, n + 1):
        counts[r:] = counts[r:] + counts[:-r].copy()
    return counts


def wilcoxon_signed_rank(a, b) -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped.  The exact null distribution is used for up
    to ``WILCOXON_EXACT_MAX_N`` nonzero differences without ties in ``|d|``;
    otherwise the normal approximation with tie-corrected variance and a 0.5
    continuity correction.  Returns ``(T_plus, p)``; all-zero differences give
    ``p = 1``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise StatsInputError("paired samples must be 1-D and of equal length")
    d = a - b
    d = d[d != 0]
    n = d.size
    if n == 0:
        return 0.0, 1.0
    ranks = st.rankdata(np.abs(d))
    t_plus = float(ranks[d > 0].sum())
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    has_ties = np.any(tie_counts > 1)
    if n <= WILCOXON_EXACT_MAX_N and not has_ties:
        counts = _signed_rank_null_counts(n)
        total = 2.0**n
        t = int(round(t_plus))
        lower = counts[: t + 1].sum() / total
        upper = counts[t:].sum() / total
        p = min(1.0, 2.0 * min(lower, upper))
        return t_plus, float(p)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    if var <= 0:
        return t_plus, 1.0
    dev = max(abs(t_plus - mean) - 0.5, 0.0)
    p = 2.0 * st.norm.sf(dev / np.sqrt(var))
    return t_plus, float(min(1.0, p))


def wilcoxon_bonferroni(matrix) -> np.ndarray:
    """Pairwise Wilcoxon p-values multiplied by the number of pairs, capped at 1."""
    m = _check_matrix(matrix)
    k = m.shape[1]
    n_pairs = k * (k - 1) // 2
    p = np.ones((k, k))
    for i, j in combinations(range(k), 2):
        _, pv = wilcoxon_signed_rank(m[:, i], m[:, j])
        p[i, j] = p[j, i] = min(1.0, pv * n_pairs)
    return p


def format_pvalue_table(p: np.ndarray, labels, digits: int = 6) -> str:
    """Tab-separated table with an empty diagonal."""
    lines = ["\t" + "\t".join(labels)]
    for i, lab in enumerate(labels):
        cells = ["" if i == j else f"{p[i, j]:.{digits}f}" for j in range(len(labels))]
        lines.append(lab + "\t" + "\t".join(cells))
    return "\n".join(lines)
