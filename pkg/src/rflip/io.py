"""Text instance format and the seeded random instance generator.

File format (UTF-8)::

    # comment lines start with '#'
    n m
    i j c        (m lines, 1-based, i <= j; i == j is the linear term q_i)

Coefficients are integers or decimals.  An instance is real-valued as soon as
one coefficient is written as a decimal.
"""
from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import QuboInstance

#: Name of the bit generator used by ``generate_instance`` (numpy PCG64).
GENERATOR_RNG = "pcg64"

_INT_RE = re.compile(r"^[+-]?\d+$")


class InstanceParseError(ValueError):
    """Base class for instance file errors; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class HeaderError(InstanceParseError):
    pass


class IndexRangeError(InstanceParseError):
    pass


class DuplicateEntryError(InstanceParseError):
    pass


class CoefficientError(InstanceParseError):
    pass


class EntryCountError(InstanceParseError):
    pass


def _parse_coef(tok, lineno):
    if _INT_RE.match(tok):
        return int(tok)
    try:
        v = float(tok)
    except ValueError:
        raise CoefficientError(f"non-numeric coefficient {tok!r}", lineno) from None
    if not math.isfinite(v):
        raise CoefficientError(f"non-finite coefficient {tok!r}", lineno)
    return v


def parse_instance(stream, name: str = "") -> QuboInstance:
    """Read an instance from a text stream, a string or a path."""
    if isinstance(stream, Path):
        name = name or stream.stem
        with open(stream, encoding="utf-8") as fh:
            return parse_instance(fh, name=name)
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    header = None
    n = m = 0
    linear = {}
    pairs = {}
    is_real = False
    count = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if header is None:
            if len(toks) != 2 or not all(_INT_RE.match(t) for t in toks):
                raise HeaderError(f"expected 'n m', got {line!r}", lineno)
            n, m = int(toks[0]), int(toks[1])
            if n < 1 or m < 0:
                raise HeaderError(f"invalid header values n={n}, m={m}", lineno)
            header = lineno
            continue
        if len(toks) != 3:
            raise InstanceParseError(f"expected 'i j c', got {line!r}", lineno)
        if not (_INT_RE.match(toks[0]) and _INT_RE.match(toks[1])):
            raise IndexRangeError(f"non-integer index in {line!r}", lineno)
        i, j = int(toks[0]), int(toks[1])
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexRangeError(f"index out of range 1..{n} in {line!r}", lineno)
        c = _parse_coef(toks[2], lineno)
        is_real |= isinstance(c, float)
        count += 1
        if count > m:
            raise EntryCountError(f"more than the {m} entries declared in the header", lineno)
        if i > j:
            i, j = j, i
        if i == j:
            if i in linear:
                raise DuplicateEntryError(f"duplicate linear term for variable {i}", lineno)
            linear[i] = c
        else:
            if (i, j) in pairs:
                raise DuplicateEntryError(f"duplicate pair ({i}, {j})", lineno)
            pairs[(i, j)] = c
    if header is None:
        raise HeaderError("missing header line")
    if count != m:
        raise EntryCountError(f"header declares {m} entries, found {count}")

    dtype = np.float64 if is_real else np.int64
    lin = np.zeros(n, dtype=dtype)
    for i, c in linear.items():
        lin[i - 1] = c
    keys = sorted(k for k, c in pairs.items() if c != 0)
    rows = np.array([k[0] - 1 for k in keys], dtype=np.int64)
    cols = np.array([k[1] - 1 for k in keys], dtype=np.int64)
    vals = np.array([pairs[k] for k in keys], dtype=dtype)
    return QuboInstance._from_arrays(n, lin, rows, cols, vals, name=name)


def _fmt(v, real):
    if real:
        return repr(float(v))
    return str(int(v))


def write_instance(inst: QuboInstance, stream=None, suppress_zeros: bool = True):
    """Write ``inst`` in canonical form (entries sorted by i, then j).

    Returns the text when ``stream`` is None.
    """
    real = not inst.is_integer
    rows, cols, vals = inst.pairs
    lin = inst.linear
    lines = []
    lin_idx = np.flatnonzero(lin) if suppress_zeros else np.arange(inst.n)
    # merge linear terms (i, i) with pairs (i, j>i) row by row
    pair_ptr = np.searchsorted(rows, np.arange(inst.n + 1))
    lin_set = set(lin_idx.tolist())
    for i in range(inst.n):
        if i in lin_set:
            lines.append(f"{i + 1} {i + 1} {_fmt(lin[i], real)}")
        for p in range(pair_ptr[i], pair_ptr[i + 1]):
            lines.append(f"{i + 1} {cols[p] + 1} {_fmt(vals[p], real)}")
    text = f"{inst.n} {len(lines)}\n" + "".join(line + "\n" for line in lines)
    if stream is None:
        return text
    stream.write(text)
    return None


def load_instance(path, minimize: bool = False) -> QuboInstance:
    path = Path(path)
    inst = parse_instance(path)
    return inst.negated() if minimize else inst


def save_instance(inst: QuboInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_instance(inst, fh)


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of a random instance.

    Linear terms are drawn first, then pairs row by row (i ascending, j > i
    ascending).  Each pair is kept with probability ``density`` and receives a
    nonzero coefficient uniform on ``[coeff_lo, coeff_hi] \\ {0}``; linear
    terms are uniform on ``[coeff_lo, coeff_hi]``.
    """

    n: int
    density: float = 1.0
    coeff_lo: int = -100
    coeff_hi: int = 100
    seed: int = 0
    rng: str = GENERATOR_RNG

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 < self.density <= 1:
            raise ValueError(f"density must be in (0, 1], got {self.density}")
        if self.coeff_lo > self.coeff_hi:
            raise ValueError("coeff_lo must not exceed coeff_hi")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.rng != GENERATOR_RNG:
            raise ValueError(f"unsupported rng {self.rng!r}; only {GENERATOR_RNG!r}")

    @property
    def default_name(self) -> str:
        return f"gen_n{self.n}_d{self.density:g}_s{self.seed}"


def _draw_nonzero(rng, lo, hi, size):
    if lo <= 0 <= hi:
        if lo == hi:
            return np.zeros(size, dtype=np.int64)
        v = rng.integers(lo, hi, size=size, endpoint=False)
        v[v >= 0] += 1
        return v
    return rng.integers(lo, hi, size=size, endpoint=True)


def generate_instance(spec: GeneratorSpec, name: str | None = None) -> QuboInstance:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = spec.n
    linear = rng.integers(spec.coeff_lo, spec.coeff_hi, size=n, endpoint=True)
    rows, cols, vals = [], [], []
    for i in range(n - 1):
        m = n - 1 - i
        keep = rng.random(m) < spec.density
        coef = _draw_nonzero(rng, spec.coeff_lo, spec.coeff_hi, m)
        keep &= coef != 0
        js = np.flatnonzero(keep)
        rows.append(np.full(len(js), i, dtype=np.int64))
        cols.append(js + i + 1)
        vals.append(coef[js])
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    else:
        rows = cols = vals = np.zeros(0, dtype=np.int64)
    return QuboInstance._from_arrays(
        n, linear, rows, cols, vals.astype(np.int64),
        name=spec.default_name if name is None else name,
    )
