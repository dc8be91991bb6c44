"""Tuples of rational quadratic forms and their basic algebra.

A form is stored through its symmetric Hessian H, so Q(x) = x^T H x / 2.
With this doubling convention a*x_i^2 contributes 2a on the diagonal and
a*x_i*x_j contributes a to both off-diagonal slots, keeping monomial
coefficients integral for integer inputs.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .linear_matrix import DEFAULT_TRIALS, SAMPLE_BOUND, LinearMatrix
from .matrices import Matrix, Subspace, Vector, vec, vec_dot

#: Coefficient-side subspaces (row spaces of mixing matrices) are plain
#: rational subspaces of R^n.
CoefficientSubspace = Subspace


@dataclass(frozen=True)
class QuadraticForm:
    hessian: Matrix

    def __post_init__(self):
        if not self.hessian.is_symmetric():
            raise ValueError("Hessian must be symmetric")

    @property
    def dim(self) -> int:
        return self.hessian.rows

    @staticmethod
    def zero(dim: int) -> "QuadraticForm":
        return QuadraticForm(Matrix.zeros(dim, dim))

    @staticmethod
    def from_monomials(dim: int, monomials: Mapping[tuple[int, int], object]) -> "QuadraticForm":
        """Build from {(i, j): coeff} with 0-based i <= j."""
        h = [[Fraction(0)] * dim for _ in range(dim)]
        for (i, j), c in monomials.items():
            c = Fraction(c)
            if i == j:
                h[i][i] += 2 * c
            else:
                i, j = min(i, j), max(i, j)
                h[i][j] += c
                h[j][i] += c
        return QuadraticForm(Matrix(h))

    def monomials(self) -> dict[tuple[int, int], Fraction]:
        """Monomial coefficients {(i, j): c} with i <= j, zero entries omitted."""
        out = {}
        d = self.dim
        for i in range(d):
            if self.hessian[i, i]:
                out[(i, i)] = self.hessian[i, i] / 2
            for j in range(i + 1, d):
                if self.hessian[i, j]:
                    out[(i, j)] = self.hessian[i, j]
        return out

    def value(self, point: Sequence) -> Fraction:
        p = vec(point)
        return vec_dot(p, self.hessian.apply(p)) / 2

    def gradient(self, point: Sequence) -> Vector:
        return self.hessian.apply(vec(point))

    def is_zero(self) -> bool:
        return self.hessian.is_zero()


@dataclass(frozen=True)
class FormTuple:
    forms: tuple[QuadraticForm, ...]

    def __post_init__(self):
        if not self.forms:
            raise ValueError("need at least one form")
        d = self.forms[0].dim
        if d < 1:
            raise ValueError("need at least one variable")
        if any(f.dim != d for f in self.forms):
            raise ValueError("forms have mismatched dimensions")

    @property
    def d(self) -> int:
        return self.forms[0].dim

    @property
    def n(self) -> int:
        return len(self.forms)

    @property
    def hessians(self) -> tuple[Matrix, ...]:
        return tuple(f.hessian for f in self.forms)

    @staticmethod
    def from_monomial_lists(
        dim: int, monomial_maps: Iterable[Mapping[tuple[int, int], object]]
    ) -> "FormTuple":
        return FormTuple(tuple(QuadraticForm.from_monomials(dim, m) for m in monomial_maps))

    def combination(self, coeffs: Sequence) -> QuadraticForm:
        c = vec(coeffs)
        if len(c) != self.n:
            raise ValueError("coefficient vector has wrong length")
        h = Matrix.zeros(self.d, self.d)
        for ci, f in zip(c, self.forms):
            if ci:
                h = h + f.hessian.scale(ci)
        return QuadraticForm(h)

    def values(self, point: Sequence) -> Vector:
        return tuple(f.value(point) for f in self.forms)

    def is_diagonal(self) -> bool:
        return all(
            f.hessian[i, j] == 0
            for f in self.forms
            for i in range(self.d)
            for j in range(self.d)
            if i != j
        )

    def diagonal_coefficient_matrix(self) -> Matrix:
        """n x d matrix of square coefficients, for diagonal tuples."""
        return Matrix([[f.hessian[j, j] / 2 for j in range(self.d)] for f in self.forms])

    def coefficient_matrix(self) -> Matrix:
        """n x (d(d+1)/2) matrix of monomial coefficients (the span map)."""
        d = self.d
        cols = [(i, j) for i in range(d) for j in range(i, d)]
        return Matrix([[f.monomials().get(col, Fraction(0)) for col in cols] for f in self.forms])

    def span_rank(self) -> int:
        return self.coefficient_matrix().rank()

    def span_kernel(self) -> CoefficientSubspace:
        """Coefficient vectors c with c . q identically zero."""
        return self.coefficient_matrix().transpose().kernel()

    def compose(self, m: Matrix) -> "FormTuple":
        """q o M: Hessians become M^T H M."""
        if m.rows != self.d:
            raise ValueError("matrix has wrong number of rows")
        mt = m.transpose()
        return FormTuple(tuple(QuadraticForm(mt @ f.hessian @ m) for f in self.forms))

    def to_json(self) -> str:
        def enc(x: Fraction):
            return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

        payload = {
            "d": self.d,
            "n": self.n,
            "hessians": [[[enc(x) for x in row] for row in f.hessian.entries] for f in self.forms],
        }
        return json.dumps(payload, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "FormTuple":
        payload = json.loads(text)
        d = int(payload["d"])
        hessians = payload["hessians"]
        if len(hessians) != int(payload["n"]):
            raise ValueError("n does not match the number of Hessians")
        forms = []
        for h in hessians:
            if len(h) != d or any(len(row) != d for row in h):
                raise ValueError("Hessian has wrong shape")
            forms.append(QuadraticForm(Matrix([[Fraction(x) for x in row] for row in h])))
        return FormTuple(tuple(forms))


def nv_count(q: FormTuple) -> int:
    """Number of variables the tuple genuinely depends on.

    A variable j is counted when some partial derivative in x_j is not
    identically zero, i.e. some Hessian has a nonzero j-th row.
    """
    used = set()
    for f in q.forms:
        for j in range(q.d):
            if j not in used and any(f.hessian[j, c] != 0 for c in range(q.d)):
                used.add(j)
    return len(used)


def restrict(q: FormTuple, h: Subspace) -> FormTuple:
    """Restrict every form to the subspace h, in h's canonical basis.

    Hessians become B^T H B for the basis matrix B of h.  Different bases
    of the same subspace give GL-equivalent results; all invariants
    computed downstream agree.
    """
    if h.ambient != q.d:
        raise ValueError("subspace ambient dimension does not match the tuple")
    if h.dim == 0:
        raise ValueError("cannot restrict to the zero subspace")
    b = h.basis_matrix()
    bt = b.transpose()
    return FormTuple(tuple(QuadraticForm(bt @ f.hessian @ b) for f in q.forms))


def restrict_to_basis(q: FormTuple, basis: Sequence[Sequence]) -> FormTuple:
    """Restriction using an explicit (ordered, possibly non-canonical) basis."""
    b = Matrix.from_columns([vec(v) for v in basis])
    bt = b.transpose()
    return FormTuple(tuple(QuadraticForm(bt @ f.hessian @ b) for f in q.forms))


def mix(q: FormTuple, s: CoefficientSubspace) -> FormTuple:
    """Tuple of combinations c . q for each basis vector c of s."""
    if s.ambient != q.n:
        raise ValueError("coefficient subspace ambient dimension must be n")
    if s.dim == 0:
        raise ValueError("cannot mix by the zero coefficient space")
    return FormTuple(tuple(q.combination(c) for c in s.basis))


def common_radical(q: FormTuple) -> Subspace:
    """Intersection of all Hessian kernels."""
    stacked = q.forms[0].hessian
    for f in q.forms[1:]:
        stacked = stacked.vstack(f.hessian)
    return stacked.kernel()


def minimal_variables(q: FormTuple) -> int:
    """Minimal number of variables after an invertible change of variables.

    Equals d - dim common_radical(q): a quadratic-form tuple depends only
    on coordinates 1..l in some basis iff the remaining d-l basis vectors
    lie in every Hessian kernel, so aligning coordinates with the common
    kernel realizes the minimum.
    """
    return q.d - common_radical(q).dim


def gradient_matrix(q: FormTuple) -> LinearMatrix:
    """The d x n matrix of linear forms with (j, i) entry d/dx_j Q_i."""
    entries = [[q.forms[i].hessian.row(j) for i in range(q.n)] for j in range(q.d)]
    return LinearMatrix(q.d, entries)


def tangent_projection_dim(q: FormTuple, v: Subspace, seed: int = 0) -> int:
    """Generic dimension of the tangent-space projection of v.

    The tangent space at x is spanned by the rows (e_j, grad_j q(x)); the
    projection dimension at x is the rank of the d x (d+n) tangent matrix
    times a basis matrix of v, and the generic value is its rank over the
    rational function field, computed by seeded random evaluation.
    """
    if v.ambient != q.d + q.n:
        raise ValueError("subspace must live in dimension d + n")
    if v.dim == 0:
        return 0
    rng = random.Random(("tangent_projection", seed))
    vb = v.basis_matrix()
    best = 0
    cap = min(q.d, v.dim)
    for _ in range(DEFAULT_TRIALS):
        point = vec(rng.randint(-SAMPLE_BOUND, SAMPLE_BOUND) for _ in range(q.d))
        grad_cols = [f.hessian.apply(point) for f in q.forms]
        tangent = Matrix.identity(q.d).hstack(Matrix.from_columns(grad_cols))
        best = max(best, (tangent @ vb).rank())
        if best == cap:
            break
    return best


# ---------------------------------------------------------------------------
# Constructors for the families used throughout.


def parabola() -> FormTuple:
    return FormTuple.from_monomial_lists(1, [{(0, 0): 1}])


def paraboloid(d: int) -> FormTuple:
    """The definite quadric x_1^2 + ... + x_d^2 as a single form."""
    return FormTuple.from_monomial_lists(d, [{(i, i): 1 for i in range(d)}])


def diagonal_tuple(coefficients: Sequence[Sequence]) -> FormTuple:
    """Tuple of diagonal forms from an n x d coefficient array."""
    rows = [list(r) for r in coefficients]
    d = len(rows[0])
    return FormTuple.from_monomial_lists(
        d, [{(j, j): c for j, c in enumerate(row) if Fraction(c) != 0} or {} for row in rows]
    )


def ack_tuple(k: Sequence[int]) -> FormTuple:
    """Quadratic monomial system for the exponent cap vector k.

    Contains every cross monomial x_i*x_j (i < j) and the square x_j^2 for
    each j with k_j >= 2; this is the degree-2 part of the derivative
    system generated by x^k.
    """
    k = list(k)
    d = len(k)
    if d < 1 or any(int(x) < 1 for x in k):
        raise ValueError("k must be a nonempty vector of positive integers")
    mono = [{(i, j): 1} for i in range(d) for j in range(i + 1, d)]
    mono += [{(j, j): 1} for j in range(d) if k[j] >= 2]
    if not mono:
        raise ValueError("k has no quadratic monomials (needs d >= 2 or some k_j >= 2)")
    return FormTuple.from_monomial_lists(d, mono)


def pv_tuple(d: int) -> FormTuple:
    """All quadratic monomials in d variables, ordered x_1^2, x_1 x_2, ..."""
    mono = []
    for i in range(d):
        mono.append({(i, i): 1})
        for j in range(i + 1, d):
            mono.append({(i, j): 1})
    return FormTuple.from_monomial_lists(d, mono)


def ack_exponent_vector(q: FormTuple) -> tuple[int, ...] | None:
    """Detect a (scaled) quadratic ACK monomial system; return k or None."""
    d = q.d
    seen: set[tuple[int, int]] = set()
    for f in q.forms:
        mono = f.monomials()
        if len(mono) != 1:
            return None
        key = next(iter(mono))
        if key in seen:
            return None
        seen.add(key)
    crosses = {(i, j) for i in range(d) for j in range(i + 1, d)}
    squares = {key[0] for key in seen if key[0] == key[1]}
    if {key for key in seen if key[0] != key[1]} != crosses:
        return None
    return tuple(2 if j in squares else 1 for j in range(d))
