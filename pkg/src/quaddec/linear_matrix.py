"""Matrices whose entries are linear forms, and their generic-rank tools.

A `LinearMatrix` entry is a coefficient vector (a_1, ..., a_d) standing for
the linear form a_1*x_1 + ... + a_d*x_d; constant terms do not occur.  The
generic rank (rank over the field of rational functions) is computed by a
seeded Schwartz-Zippel evaluation, and the zero-block normal form follows
the constructive highest-variable pivoting argument.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable

from .matrices import Matrix, Vector, vec

# Entries are sampled from a symmetric integer range of size > 2**32, so a
# single trial fails with probability at most (matrix size)/2**32.
SAMPLE_BOUND = 2**32
DEFAULT_TRIALS = 3


class LinearMatrix:
    """Matrix of homogeneous degree-1 forms in `nvars` variables."""

    __slots__ = ("rows", "cols", "nvars", "entries")

    def __init__(self, nvars: int, entries: Iterable[Iterable[Iterable]]):
        rows = tuple(tuple(vec(e) for e in row) for row in entries)
        self.nvars = nvars
        self.entries = rows
        self.rows = len(rows)
        self.cols = len(rows[0]) if rows else 0
        for row in rows:
            if len(row) != self.cols:
                raise ValueError("ragged matrix")
            for e in row:
                if len(e) != nvars:
                    raise ValueError("entry has wrong number of coefficients")

    @staticmethod
    def zeros(nvars: int, rows: int, cols: int) -> "LinearMatrix":
        z = tuple(Fraction(0) for _ in range(nvars))
        return LinearMatrix(nvars, [[z] * cols for _ in range(rows)])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LinearMatrix)
            and self.nvars == other.nvars
            and self.entries == other.entries
        )

    def __repr__(self):
        return f"LinearMatrix({self.rows}x{self.cols} in {self.nvars} vars)"

    def entry(self, i: int, j: int) -> Vector:
        return self.entries[i][j]

    def is_zero(self) -> bool:
        return all(all(c == 0 for c in e) for row in self.entries for e in row)

    def evaluate(self, point: Vector) -> Matrix:
        """Numeric matrix at a point: each entry is its linear form's value."""
        if len(point) != self.nvars:
            raise ValueError("point has wrong dimension")
        return Matrix(
            [[sum(c * x for c, x in zip(e, point)) for e in row] for row in self.entries]
        )

    def left_mul(self, m: Matrix) -> "LinearMatrix":
        """m @ self with a rational matrix on the left."""
        if m.cols != self.rows:
            raise ValueError("dimension mismatch")
        out = []
        for i in range(m.rows):
            row = []
            for j in range(self.cols):
                acc = [Fraction(0)] * self.nvars
                for k in range(self.rows):
                    c = m[i, k]
                    if c:
                        e = self.entries[k][j]
                        for v in range(self.nvars):
                            acc[v] += c * e[v]
                row.append(acc)
            out.append(row)
        return LinearMatrix(self.nvars, out)

    def right_mul(self, m: Matrix) -> "LinearMatrix":
        """self @ m with a rational matrix on the right."""
        if self.cols != m.rows:
            raise ValueError("dimension mismatch")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(m.cols):
                acc = [Fraction(0)] * self.nvars
                for k in range(self.cols):
                    c = m[k, j]
                    if c:
                        e = self.entries[i][k]
                        for v in range(self.nvars):
                            acc[v] += c * e[v]
                row.append(acc)
            out.append(row)
        return LinearMatrix(self.nvars, out)

    def __sub__(self, other: "LinearMatrix") -> "LinearMatrix":
        return LinearMatrix(
            self.nvars,
            [
                [tuple(x - y for x, y in zip(e, f)) for e, f in zip(r, s)]
                for r, s in zip(self.entries, other.entries)
            ],
        )


def generic_rank(a: LinearMatrix, seed: int = 0, trials: int = DEFAULT_TRIALS) -> int:
    """Rank of `a` over the rational function field, via random evaluation.

    The result is a lower bound that equals the true generic rank except
    with probability < trials * size / 2**32 (Schwartz-Zippel); it is
    deterministic given the seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(("generic_rank", seed))
    best = 0
    cap = min(a.rows, a.cols)
    for _ in range(trials):
        point = vec(rng.randint(-SAMPLE_BOUND, SAMPLE_BOUND) for _ in range(a.nvars))
        best = max(best, a.evaluate(point).rank())
        if best == cap:
            break
    return best


def zero_block_normal_form(a: LinearMatrix) -> tuple[Matrix, Matrix, LinearMatrix]:
    """Real row/column equivalence exposing a maximal trailing zero block.

    Returns (b, b_prime, transformed) with b @ a @ b_prime == transformed
    exactly as matrices of linear forms, b and b_prime invertible rational
    matrices, and the trailing (rows-t) x (cols-t) block of `transformed`
    identically zero, where t <= generic rank is the number of pivot steps.

    Pivoting repeatedly picks the highest-index variable still present in
    the active submatrix; among entries containing it, the lexicographically
    smallest (row, col) wins, the pivot is normalized, and that variable's
    coefficient is cleared from the pivot row and column.
    """
    nvars = a.nvars
    work = [[list(e) for e in row] for row in a.entries]
    nr, nc = a.rows, a.cols
    b = [[Fraction(1 if i == j else 0) for j in range(nr)] for i in range(nr)]
    bp = [[Fraction(1 if i == j else 0) for j in range(nc)] for i in range(nc)]

    def row_scale(i, c):
        work[i] = [[c * x for x in e] for e in work[i]]
        b[i] = [c * x for x in b[i]]

    def row_axpy(dst, src, f):
        """row dst -= f * row src"""
        work[dst] = [
            [x - f * y for x, y in zip(e, s)] for e, s in zip(work[dst], work[src])
        ]
        b[dst] = [x - f * y for x, y in zip(b[dst], b[src])]

    def col_axpy(dst, src, f):
        for row in work:
            row[dst] = [x - f * y for x, y in zip(row[dst], row[src])]
        for row in bp:
            row[dst] -= f * row[src]

    def row_swap(i, j):
        work[i], work[j] = work[j], work[i]
        b[i], b[j] = b[j], b[i]

    def col_swap(i, j):
        for row in work:
            row[i], row[j] = row[j], row[i]
        for row in bp:
            row[i], row[j] = row[j], row[i]

    t = 0
    while t < min(nr, nc):
        k = -1
        for i in range(t, nr):
            for j in range(t, nc):
                e = work[i][j]
                for v in range(nvars - 1, k, -1):
                    if e[v] != 0:
                        k = v
                        break
        if k < 0:
            break
        pivot = next(
            (i, j)
            for i in range(t, nr)
            for j in range(t, nc)
            if work[i][j][k] != 0
        )
        if pivot[0] != t:
            row_swap(t, pivot[0])
        if pivot[1] != t:
            col_swap(t, pivot[1])
        p = work[t][t][k]
        if p != 1:
            row_scale(t, Fraction(1) / p)
        for i in range(nr):
            if i != t and work[i][t][k] != 0:
                row_axpy(i, t, work[i][t][k])
        for j in range(nc):
            if j != t and work[t][j][k] != 0:
                col_axpy(j, t, work[t][j][k])
        t += 1

    transformed = LinearMatrix(nvars, work)
    return Matrix(b), Matrix(bp), transformed
