"""Shared fixtures and brute-force oracles.

The oracles below deliberately avoid the package's own objective and
derivative code: they work from a plain Python dict of coefficients.
"""
from itertools import product

import numpy as np
import pytest
from hypothesis import strategies as st

from rflip import QuboInstance


def tiny3():
    # linear (2, -1, 3); q01 = -4, q02 = 1, q12 = -2
    return QuboInstance(3, [2, -1, 3], {(0, 1): -4, (0, 2): 1, (1, 2): -2}, name="TINY3")


def tiny2b():
    return QuboInstance(2, [-1, -1], {(0, 1): 3}, name="TINY2B")


@pytest.fixture
def TINY3():
    return tiny3()


@pytest.fixture
def TINY2B():
    return tiny2b()


def coeff_dict(inst):
    rows, cols, vals = inst.pairs
    return [v.item() for v in inst.linear], {(int(i), int(j)): v.item() for i, j, v in zip(rows, cols, vals)}


def oracle_f(inst, x):
    lin, quad = coeff_dict(inst)
    x = [int(v) for v in x]
    return sum(c * xi for c, xi in zip(lin, x)) + sum(c * x[i] * x[j] for (i, j), c in quad.items())


def oracle_E(inst, x):
    lin, quad = coeff_dict(inst)
    x = [int(v) for v in x]
    E = list(lin)
    for (i, j), c in quad.items():
        E[i] += c * x[j]
        E[j] += c * x[i]
    return E


def oracle_optimum(inst):
    return max(oracle_f(inst, x) for x in product((0, 1), repeat=inst.n))


def random_instance(rng, n, density, lo=-10, hi=10, name=""):
    """Independent random instance builder (not the package generator)."""
    pairs = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                c = int(rng.integers(lo, hi + 1))
                if c:
                    pairs[(i, j)] = c
    return QuboInstance(n, [int(v) for v in rng.integers(lo, hi + 1, size=n)], pairs, name=name)


@st.composite
def instances(draw, max_n=8, min_n=1, lo=-10, hi=10):
    n = draw(st.integers(min_n, max_n))
    lin = draw(st.lists(st.integers(lo, hi), min_size=n, max_size=n))
    keys = [(i, j) for i in range(n) for j in range(i + 1, n)]
    vals = draw(st.lists(st.integers(lo, hi), min_size=len(keys), max_size=len(keys)))
    return QuboInstance(n, lin, {k: v for k, v in zip(keys, vals) if v})


@st.composite
def instance_and_x(draw, max_n=8, min_n=1):
    inst = draw(instances(max_n=max_n, min_n=min_n))
    x = draw(st.lists(st.integers(0, 1), min_size=inst.n, max_size=inst.n))
    return inst, np.array(x, dtype=np.int8)


def dense_arrays(inst):
    """Linear vector and symmetric pair matrix built from the coefficient dict."""
    lin, quad = coeff_dict(inst)
    Q = np.zeros((inst.n, inst.n), dtype=np.int64 if inst.is_integer else np.float64)
    for (i, j), c in quad.items():
        Q[i, j] = Q[j, i] = c
    return np.array(lin, dtype=Q.dtype), Q


def all_assignments(n):
    return np.array(list(product((0, 1), repeat=n)), dtype=np.int64)


def oracle_values(inst, X):
    """Objective of every row of X."""
    lin, Q = dense_arrays(inst)
    return X @ lin + np.einsum("ki,ij,kj->k", X, np.triu(Q, 1), X)


ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, detail):
    line = f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line, flush=True)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
