"""Matrices of polynomials: determinants, characteristic polynomials, minors, rank."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .errors import BadSize, IndexOutOfRange, MinorLimitExceeded, NotSquare
from .poly import (
    LAMBDA,
    MODULUS,
    FieldPoint,
    SparsePoly,
    _coerce,
    aligned,
    coefficient_of_power,
    dot,
    evaluate,
)

MINOR_LIMIT = 10**6


class PolyMatrix:
    """Dense rectangular grid of :class:`SparsePoly` entries (immutable)."""

    __slots__ = ("_rows", "nrows", "ncols")

    def __init__(self, rows: Iterable[Iterable]):
        grid = [tuple(_entry(x) for x in row) for row in rows]
        widths = {len(r) for r in grid}
        if len(widths) > 1:
            raise ValueError("matrix rows have different lengths")
        self._rows = tuple(grid)
        self.nrows = len(grid)
        self.ncols = widths.pop() if widths else 0

    @classmethod
    def identity(cls, n: int) -> "PolyMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "PolyMatrix":
        return cls([[0] * ncols for _ in range(nrows)])

    @property
    def shape(self) -> tuple:
        return (self.nrows, self.ncols)

    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def __getitem__(self, ij) -> SparsePoly:
        i, j = ij
        return self._rows[i][j]

    def row(self, i: int) -> tuple:
        return self._rows[i]

    def rows(self) -> list:
        return [list(r) for r in self._rows]

    def __eq__(self, other):
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return self.shape == other.shape and all(
            a == b for ra, rb in zip(self._rows, other._rows) for a, b in zip(ra, rb)
        )

    def __hash__(self):
        return hash(self._rows)

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return PolyMatrix([[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self._rows, other._rows)])

    def __neg__(self) -> "PolyMatrix":
        return PolyMatrix([[-a for a in r] for r in self._rows])

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return self + (-other)

    def scale(self, c) -> "PolyMatrix":
        c = _entry(c)
        return PolyMatrix([[a * c for a in r] for r in self._rows])

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(zip(*self._rows)) if self.nrows else PolyMatrix([])

    def variables(self) -> tuple:
        vs = set()
        for r in self._rows:
            for a in r:
                vs.update(a.variables())
        return tuple(sorted(vs))

    def is_zero(self) -> bool:
        return all(a.is_zero() for r in self._rows for a in r)

    def evaluate(self, point, modulus: int | None = None) -> list:
        return [[evaluate(a, point, modulus) for a in r] for r in self._rows]

    def to_strings(self) -> list:
        return [[str(a) for a in r] for r in self._rows]

    def __repr__(self) -> str:
        return f"PolyMatrix({self.to_strings()!r})"


def _entry(x) -> SparsePoly:
    p = _coerce(x)
    if p is NotImplemented:
        raise TypeError(f"cannot use {type(x).__name__} as a matrix entry")
    return p


def submatrix(m: PolyMatrix, drop_rows: Iterable[int] = (), drop_cols: Iterable[int] = ()) -> PolyMatrix:
    """Delete the given (0-based) rows and columns."""
    drop_rows, drop_cols = set(drop_rows), set(drop_cols)
    for i in drop_rows:
        if not 0 <= i < m.nrows:
            raise IndexOutOfRange(f"row {i} outside 0..{m.nrows - 1}")
    for j in drop_cols:
        if not 0 <= j < m.ncols:
            raise IndexOutOfRange(f"column {j} outside 0..{m.ncols - 1}")
    keep_c = [j for j in range(m.ncols) if j not in drop_cols]
    return PolyMatrix(
        [[m[i, j] for j in keep_c] for i in range(m.nrows) if i not in drop_rows]
    )


def select(m: PolyMatrix, rows: Sequence[int], cols: Sequence[int] | None = None) -> PolyMatrix:
    cols = range(m.ncols) if cols is None else cols
    return PolyMatrix([[m[i, j] for j in cols] for i in rows])


def berkowitz(m: PolyMatrix) -> list:
    """Coefficients of ``det(x I - m)``, highest degree first (length n + 1).

    Division-free: each step multiplies the characteristic vector of the
    trailing principal submatrix by a lower-triangular Toeplitz matrix built
    from ``-a``, ``-R C``, ``-R A C``, ... of the leading border.
    """
    if not m.is_square():
        raise NotSquare(f"{m.nrows}x{m.ncols} matrix is not square")
    n = m.nrows
    one = SparsePoly.one()
    if n == 0:
        return [one]
    rows = m._rows
    vec = [one, -rows[n - 1][n - 1]]
    for k in range(n - 2, -1, -1):
        size = n - k
        a = rows[k][k]
        border_r = rows[k][k + 1 :]
        border_c = [rows[i][k] for i in range(k + 1, n)]
        inner = [r[k + 1 :] for r in rows[k + 1 :]]
        items = [one, -a]
        v = border_c
        for j in range(size - 1):
            items.append(-dot(border_r, v))
            if j < size - 2:
                v = [dot(r, v) for r in inner]
        vec = [
            dot([items[i - j] for j in range(max(0, i - size), min(i, size - 1) + 1)],
                [vec[j] for j in range(max(0, i - size), min(i, size - 1) + 1)])
            for i in range(size + 1)
        ]
    return vec


def determinant_berkowitz(m: PolyMatrix) -> SparsePoly:
    n = m.nrows
    const = berkowitz(m)[n]
    return -const if n % 2 else const


def determinant(m: PolyMatrix) -> SparsePoly:
    """Exact determinant by Laplace expansion memoized over column subsets.

    Rows are consumed sparsest first; the state after ``k`` rows maps each
    set of ``k`` used columns to the corresponding minor, so every
    intermediate value is a genuine minor of ``m`` and no division is needed.
    """
    if not m.is_square():
        raise NotSquare(f"{m.nrows}x{m.ncols} matrix is not square")
    n = m.nrows
    if n == 0:
        return SparsePoly.one()
    flat = aligned(x for r in m._rows for x in r)
    grid = [flat[i * n : (i + 1) * n] for i in range(n)]
    support = [[j for j in range(n) if grid[i][j]] for i in range(n)]
    order = sorted(range(n), key=lambda i: (len(support[i]), i))
    states = {0: SparsePoly.const(_permutation_sign(order))}
    for i in order:
        contributions: dict = {}
        for mask, minor in states.items():
            for j in support[i]:
                bit = 1 << j
                if mask & bit:
                    continue
                # used columns to the right of j are inversions
                flip = bin(mask >> (j + 1)).count("1") & 1
                lhs, rhs = contributions.setdefault(mask | bit, ([], []))
                lhs.append(-minor if flip else minor)
                rhs.append(grid[i][j])
        states = {}
        for mask, (lhs, rhs) in contributions.items():
            val = dot(lhs, rhs)
            if val:
                states[mask] = val
        if not states:
            return SparsePoly.zero()
    return states.get((1 << n) - 1, SparsePoly.zero())


def _permutation_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        length, j = 0, i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def charpoly_coeffs(m: PolyMatrix) -> list:
    """``[e_0, ..., e_{n-1}]`` of ``det(lam I - m) = lam^n + e_{n-1} lam^{n-1} + ... + e_0``."""
    if not m.is_square():
        raise NotSquare(f"{m.nrows}x{m.ncols} matrix is not square")
    if LAMBDA in m.variables():
        raise ValueError("matrix entries must not involve lam")
    n = m.nrows
    shifted = PolyMatrix.identity(n).scale(SparsePoly.var(LAMBDA)) - m
    det = determinant(shifted)
    return [coefficient_of_power(det, LAMBDA, i) for i in range(n)]


# -- randomized rank over GF(p) ----------------------------------------------


def rank_mod_p(rows: list, p: int = MODULUS) -> int:
    """Rank of an integer matrix over ``Z/p`` by Gaussian elimination."""
    a = [[x % p for x in r] for r in rows]
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    rank = 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, nrows) if a[i][col]), None)
        if pivot is None:
            continue
        a[rank], a[pivot] = a[pivot], a[rank]
        inv = pow(a[rank][col], -1, p)
        prow = [x * inv % p for x in a[rank]]
        a[rank] = prow
        for i in range(nrows):
            if i != rank and a[i][col]:
                f = a[i][col]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], prow)]
        rank += 1
        if rank == nrows:
            break
    return rank


def det_mod_p(rows: list, p: int = MODULUS) -> int:
    a = [[x % p for x in r] for r in rows]
    n = len(a)
    det = 1
    for col in range(n):
        pivot = next((i for i in range(col, n) if a[i][col]), None)
        if pivot is None:
            return 0
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det = det * a[col][col] % p
        inv = pow(a[col][col], -1, p)
        for i in range(col + 1, n):
            if a[i][col]:
                f = a[i][col] * inv % p
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[col])]
    return det % p


@dataclass(frozen=True)
class RankEstimate:
    rank: int
    hits: int  # trials that reached the maximum
    trials: int


def generic_rank(m: PolyMatrix, trials: int = 3, rng: random.Random | int | None = 0) -> RankEstimate:
    """Rank of ``m`` at a generic point, estimated at random points of GF(2^61 - 1).

    A random point can only under-estimate the generic rank, so the maximum
    over independent trials is reported.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if LAMBDA in m.variables():
        raise ValueError("matrix entries must not involve lam")
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    variables = m.variables()
    ranks = []
    for _ in range(trials):
        point = FieldPoint.random(variables, rng)
        ranks.append(rank_mod_p(m.evaluate(point), point.modulus))
    best = max(ranks)
    return RankEstimate(best, ranks.count(best), trials)


# -- minors ------------------------------------------------------------------


@dataclass(frozen=True)
class Minor:
    rows: tuple
    cols: tuple
    value: SparsePoly

    @property
    def is_zero(self) -> bool:
        return self.value.is_zero()


def maximal_minors(m: PolyMatrix, size: int, limit: int = MINOR_LIMIT) -> list:
    """All ``size x size`` minors, in lexicographic order of (rows, cols)."""
    if not 0 <= size <= min(m.nrows, m.ncols):
        raise BadSize(f"minor size {size} invalid for a {m.nrows}x{m.ncols} matrix")
    count = math.comb(m.nrows, size) * math.comb(m.ncols, size)
    if count > limit:
        raise MinorLimitExceeded(
            f"{count} minors exceed the cap of {limit}; use the square determinant instead"
        )
    out = []
    for rs in combinations(range(m.nrows), size):
        for cs in combinations(range(m.ncols), size):
            out.append(Minor(rs, cs, determinant(select(m, rs, cs))))
    return out
