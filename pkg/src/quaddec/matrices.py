"""Exact rational matrices, subspaces and quadratic-form signatures.

Everything here is computed over the rationals with `fractions.Fraction`;
there is deliberately no floating point anywhere.  Ranks use fraction-free
(Bareiss) elimination on integer-rescaled rows, which keeps intermediate
entries as plain integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import NonSymmetricError

Vector = tuple[Fraction, ...]


def vec(entries: Iterable) -> Vector:
    return tuple(Fraction(e) for e in entries)


def vec_add(a: Vector, b: Vector) -> Vector:
    return tuple(x + y for x, y in zip(a, b, strict=True))


def vec_sub(a: Vector, b: Vector) -> Vector:
    return tuple(x - y for x, y in zip(a, b, strict=True))


def vec_scale(c, a: Vector) -> Vector:
    c = Fraction(c)
    return tuple(c * x for x in a)


def vec_dot(a: Vector, b: Vector) -> Fraction:
    return sum((x * y for x, y in zip(a, b, strict=True)), Fraction(0))


def unit_vector(n: int, i: int) -> Vector:
    return tuple(Fraction(1 if j == i else 0) for j in range(n))


def _scale_rows_to_int(rows: Sequence[Sequence[Fraction]]) -> list[list[int]]:
    """Rescale each row by the lcm of denominators (rank-preserving)."""
    out = []
    for row in rows:
        lcm = 1
        for x in row:
            lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
        out.append([int(x * lcm) for x in row])
    return out


def _int_rank(m: list[list[int]]) -> int:
    """Rank by fraction-free Bareiss elimination; mutates its argument."""
    nr = len(m)
    nc = len(m[0]) if nr else 0
    rank = 0
    prev = 1
    r = 0
    for c in range(nc):
        piv = None
        for i in range(r, nr):
            if m[i][c]:
                piv = i
                break
        if piv is None:
            continue
        if piv != r:
            m[r], m[piv] = m[piv], m[r]
        p = m[r][c]
        for i in range(r + 1, nr):
            q = m[i][c]
            mi = m[i]
            mr = m[r]
            for j in range(c, nc):
                mi[j] = (p * mi[j] - q * mr[j]) // prev
        prev = p
        rank += 1
        r += 1
        if r == nr:
            break
    return rank


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (rows, pivot columns)."""
    rows = [list(r) for r in rows]
    nr = len(rows)
    nc = len(rows[0]) if nr else 0
    pivots: list[int] = []
    r = 0
    for c in range(nc):
        piv = None
        for i in range(r, nr):
            if rows[i][c]:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][c]
        rows[r] = [x / p for x in rows[r]]
        for i in range(nr):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nr:
            break
    return rows[:r], pivots


class Matrix:
    """Immutable exact rational matrix."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries: Iterable[Iterable]):
        rows = tuple(
            tuple(x if type(x) is Fraction else Fraction(x) for x in row) for row in entries
        )
        self.entries = rows
        self.rows = len(rows)
        self.cols = len(rows[0]) if rows else 0
        for row in rows:
            if len(row) != self.cols:
                raise ValueError("ragged matrix")

    @staticmethod
    def zeros(rows: int, cols: int) -> "Matrix":
        z = Fraction(0)
        return Matrix([[z] * cols for _ in range(rows)])

    @staticmethod
    def identity(n: int) -> "Matrix":
        return Matrix([[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)])

    @staticmethod
    def diagonal(diag: Iterable) -> "Matrix":
        d = [Fraction(x) for x in diag]
        n = len(d)
        return Matrix([[d[i] if i == j else Fraction(0) for j in range(n)] for i in range(n)])

    @staticmethod
    def from_columns(columns: Sequence[Vector]) -> "Matrix":
        if not columns:
            return Matrix([])
        n = len(columns[0])
        return Matrix([[col[i] for col in columns] for i in range(n)])

    def __eq__(self, other) -> bool:
        return isinstance(other, Matrix) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"Matrix({[[str(x) for x in row] for row in self.entries]})"

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def row(self, i: int) -> Vector:
        return self.entries[i]

    def column(self, j: int) -> Vector:
        return tuple(row[j] for row in self.entries)

    def __add__(self, other: "Matrix") -> "Matrix":
        return Matrix([[x + y for x, y in zip(r, s)] for r, s in zip(self.entries, other.entries)])

    def __sub__(self, other: "Matrix") -> "Matrix":
        return Matrix([[x - y for x, y in zip(r, s)] for r, s in zip(self.entries, other.entries)])

    def scale(self, c) -> "Matrix":
        c = Fraction(c)
        return Matrix([[c * x for x in row] for row in self.entries])

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch")
        cols = [other.column(j) for j in range(other.cols)]
        return Matrix([[vec_dot(row, col) for col in cols] for row in self.entries])

    def apply(self, v: Vector) -> Vector:
        return tuple(vec_dot(row, v) for row in self.entries)

    def transpose(self) -> "Matrix":
        return Matrix([self.column(j) for j in range(self.cols)])

    def is_zero(self) -> bool:
        return all(x == 0 for row in self.entries for x in row)

    def is_symmetric(self) -> bool:
        if self.rows != self.cols:
            return False
        return all(
            self.entries[i][j] == self.entries[j][i]
            for i in range(self.rows)
            for j in range(i + 1, self.cols)
        )

    def rank(self) -> int:
        if self.rows == 0 or self.cols == 0:
            return 0
        return _int_rank(_scale_rows_to_int(self.entries))

    def rref(self) -> tuple["Matrix", list[int]]:
        rows, pivots = _rref([list(r) for r in self.entries])
        return (Matrix(rows) if rows else Matrix.zeros(0, self.cols)), pivots

    def kernel(self) -> "Subspace":
        """Rational basis of the right kernel."""
        rows, pivots = _rref([list(r) for r in self.entries])
        free = [c for c in range(self.cols) if c not in pivots]
        basis = []
        for fc in free:
            v = [Fraction(0)] * self.cols
            v[fc] = Fraction(1)
            for r, pc in enumerate(pivots):
                v[pc] = -rows[r][fc]
            basis.append(tuple(v))
        return Subspace(self.cols, basis)

    def solve(self, rhs: Vector) -> Vector | None:
        """One solution of self @ x = rhs, or None if inconsistent."""
        aug = [list(row) + [b] for row, b in zip(self.entries, rhs, strict=True)]
        rows, pivots = _rref(aug)
        x = [Fraction(0)] * self.cols
        for r, pc in enumerate(pivots):
            if pc == self.cols:
                return None
            x[pc] = rows[r][self.cols]
        return tuple(x)

    def inverse(self) -> "Matrix":
        if self.rows != self.cols:
            raise ValueError("not square")
        n = self.rows
        aug = [list(row) + list(Matrix.identity(n).entries[i]) for i, row in enumerate(self.entries)]
        rows, pivots = _rref(aug)
        if pivots != list(range(n)):
            raise ValueError("matrix not invertible")
        return Matrix([row[n:] for row in rows])

    def hstack(self, other: "Matrix") -> "Matrix":
        return Matrix([list(r) + list(s) for r, s in zip(self.entries, other.entries, strict=True)])

    def vstack(self, other: "Matrix") -> "Matrix":
        return Matrix(list(self.entries) + list(other.entries))

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "Matrix":
        return Matrix([[self.entries[i][j] for j in col_idx] for i in row_idx])


def rank_exact(m: Matrix) -> int:
    """Rank over the rationals by fraction-free elimination."""
    return m.rank()


def kernel(m: Matrix) -> "Subspace":
    return m.kernel()


class Subspace:
    """A rational linear subspace given by an independent basis.

    The stored basis is the canonical RREF basis, so two equal subspaces
    compare equal and serialize identically.
    """

    __slots__ = ("ambient", "basis")

    def __init__(self, ambient: int, basis: Iterable[Iterable]):
        raw = [vec(b) for b in basis]
        for b in raw:
            if len(b) != ambient:
                raise ValueError("basis vector has wrong length")
        if raw:
            rows, _ = _rref([list(b) for b in raw])
            canon = tuple(tuple(r) for r in rows)
            if len(canon) != len(raw):
                raise ValueError("basis vectors are linearly dependent")
        else:
            canon = ()
        self.ambient = ambient
        self.basis = canon

    @staticmethod
    def zero(ambient: int) -> "Subspace":
        return Subspace(ambient, [])

    @staticmethod
    def full(ambient: int) -> "Subspace":
        return Subspace(ambient, [unit_vector(ambient, i) for i in range(ambient)])

    @staticmethod
    def span(ambient: int, vectors: Iterable[Iterable]) -> "Subspace":
        """Span of possibly dependent vectors."""
        rows = [list(vec(v)) for v in vectors]
        if not rows:
            return Subspace.zero(ambient)
        rref_rows, _ = _rref(rows)
        return Subspace(ambient, rref_rows)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Subspace)
            and self.ambient == other.ambient
            and self.basis == other.basis
        )

    def __hash__(self):
        return hash((self.ambient, self.basis))

    def __repr__(self):
        return f"Subspace(ambient={self.ambient}, dim={self.dim})"

    def sort_key(self):
        return (self.dim, self.basis)

    def basis_matrix(self) -> Matrix:
        """d x k matrix whose columns are the basis vectors."""
        return Matrix.from_columns(list(self.basis)) if self.basis else Matrix.zeros(self.ambient, 0)

    def contains_vector(self, v: Vector) -> bool:
        rows = [list(b) for b in self.basis] + [list(vec(v))]
        reduced, _ = _rref(rows)
        return len(reduced) == self.dim or all(x == 0 for x in v)

    def contains(self, other: "Subspace") -> bool:
        return all(self.contains_vector(b) for b in other.basis)

    def add(self, other: "Subspace") -> "Subspace":
        if self.ambient != other.ambient:
            raise ValueError("ambient mismatch")
        return Subspace.span(self.ambient, list(self.basis) + list(other.basis))

    def intersect(self, other: "Subspace") -> "Subspace":
        if self.ambient != other.ambient:
            raise ValueError("ambient mismatch")
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient)
        cols = [list(b) for b in self.basis] + [[-x for x in b] for b in other.basis]
        stacked = Matrix.from_columns([vec(c) for c in cols])
        sols = stacked.kernel()
        vectors = []
        for s in sols.basis:
            alpha = s[: self.dim]
            v = [Fraction(0)] * self.ambient
            for a, b in zip(alpha, self.basis):
                for i in range(self.ambient):
                    v[i] += a * b[i]
            vectors.append(v)
        return Subspace.span(self.ambient, vectors)


@dataclass(frozen=True)
class Signature:
    positives: int
    negatives: int
    zeros: int

    def __post_init__(self):
        if min(self.positives, self.negatives, self.zeros) < 0:
            raise ValueError("negative signature count")

    @property
    def dim(self) -> int:
        return self.positives + self.negatives + self.zeros

    @property
    def rank(self) -> int:
        return self.positives + self.negatives


def _congruence_blocks(m: Matrix):
    """Congruence-diagonalize a symmetric matrix with 2x2 hyperbolic pivots.

    Returns a list of blocks, each ('diag', value, basis_vector) or
    ('hyp', basis_vector_a, basis_vector_b) or ('zero', basis_vector).
    The basis vectors v satisfy: distinct blocks are mutually orthogonal
    for the form, diag vectors have form-value `value`, hyp/zero vectors
    have form-value 0.
    """
    if not m.is_symmetric():
        raise NonSymmetricError("matrix is not symmetric")
    n = m.rows
    a = [list(row) for row in m.entries]
    t = [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]

    def col_of_t(j):
        return tuple(t[i][j] for i in range(n))

    def swap(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        a[i], a[j] = a[j], a[i]
        for row in t:
            row[i], row[j] = row[j], row[i]

    def col_op(dst, src, f):
        """column dst -= f * column src (and symmetric row op on a)."""
        for row in a:
            row[dst] -= f * row[src]
        a[dst] = [x - f * y for x, y in zip(a[dst], a[src])]
        for row in t:
            row[dst] -= f * row[src]

    blocks = []
    i = 0
    while i < n:
        if a[i][i] != 0:
            p = a[i][i]
            for j in range(i + 1, n):
                if a[i][j] != 0:
                    col_op(j, i, a[i][j] / p)
            blocks.append(("diag", p, col_of_t(i)))
            i += 1
            continue
        piv = next((j for j in range(i + 1, n) if a[j][j] != 0), None)
        if piv is not None:
            swap(i, piv)
            continue
        off = next((j for j in range(i + 1, n) if a[i][j] != 0), None)
        if off is None:
            blocks.append(("zero", col_of_t(i)))
            i += 1
            continue
        if off != i + 1:
            swap(i + 1, off)
        h = a[i][i + 1]
        for j in range(i + 2, n):
            if a[i][j] != 0 or a[i + 1][j] != 0:
                fi = a[i + 1][j] / h
                fj = a[i][j] / h
                if fi:
                    col_op(j, i, fi)
                if fj:
                    col_op(j, i + 1, fj)
        blocks.append(("hyp", col_of_t(i), col_of_t(i + 1)))
        i += 2
    return blocks


def signature(m: Matrix) -> Signature:
    """Sylvester signature of a symmetric rational matrix, exactly."""
    pos = neg = zero = 0
    for block in _congruence_blocks(m):
        if block[0] == "diag":
            if block[1] > 0:
                pos += 1
            else:
                neg += 1
        elif block[0] == "hyp":
            pos += 1
            neg += 1
        else:
            zero += 1
    return Signature(pos, neg, zero)


def _fraction_sqrt(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    pn = math.isqrt(x.numerator)
    pd = math.isqrt(x.denominator)
    if pn * pn == x.numerator and pd * pd == x.denominator:
        return Fraction(pn, pd)
    return None


def isotropic_subspace(m: Matrix) -> Subspace:
    """A rational totally isotropic subspace of a symmetric form.

    Takes the radical, one side of every hyperbolic block, and pairs up
    opposite-sign diagonal entries whose ratio is a rational square.  This
    attains the real maximal dimension whenever those ratios are squares;
    over the rationals it may fall short, which only weakens (never
    invalidates) witness upper bounds built from it.
    """
    blocks = _congruence_blocks(m)
    vectors: list[Vector] = []
    pos_entries = []
    neg_entries = []
    for block in blocks:
        if block[0] == "zero":
            vectors.append(block[1])
        elif block[0] == "hyp":
            vectors.append(block[1])
        else:
            (pos_entries if block[1] > 0 else neg_entries).append((block[1], block[2]))
    used_neg = [False] * len(neg_entries)
    for pval, pvec_ in pos_entries:
        for k, (nval, nvec_) in enumerate(neg_entries):
            if used_neg[k]:
                continue
            tsq = _fraction_sqrt(-pval / nval)
            if tsq is not None:
                vectors.append(vec_add(pvec_, vec_scale(tsq, nvec_)))
                used_neg[k] = True
                break
    return Subspace.span(m.rows, vectors)
