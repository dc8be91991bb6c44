"""Certified computation of the variable-count invariants of a form tuple.

The invariant of cell (d', n') is the least number of variables that some
n'-dimensional space of combinations of the forms depends on after
restricting to a d'-dimensional subspace, minimized over all subspaces and
linear changes of variables.

Upper bounds are certified by flag witnesses: nested subspaces u <= h with
dim h = d' together with an n'-dimensional coefficient space s such that
every combination in s has vanishing mixed Hessian block between u and h.
Such a flag proves the invariant is at most dim h - dim u, because in a
basis adapted to the flag the mixed restricted tuple does not involve the
u-coordinates.  Lower bounds come from sound structural rules (signatures
of single combinations, exact pencil minimal ranks, class solvers); when
the two sides disagree the cell honestly reports an interval.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InvalidWitness, NotACK, NotDiagonal, NotPair
from .forms import (
    CoefficientSubspace,
    FormTuple,
    ack_exponent_vector,
    common_radical,
    minimal_variables,
)
from .matrices import (
    Matrix,
    Subspace,
    Vector,
    _congruence_blocks,
    signature,
    unit_vector,
    vec,
    vec_add,
    vec_scale,
)
from . import univariate as up

LEVEL_EXACT = "EXACT"
LEVEL_WITNESS_UB = "WITNESS_UB"
LEVEL_PROBABILISTIC = "PROBABILISTIC"


# ---------------------------------------------------------------------------
# Witnesses and certified values


@dataclass(frozen=True)
class FlagWitness:
    h: Subspace
    u: Subspace
    s: CoefficientSubspace

    @property
    def bound(self) -> int:
        return self.h.dim - self.u.dim

    def serialized(self) -> str:
        def enc(space):
            return [[str(x) for x in b] for b in space.basis]

        return json.dumps(
            {"h": enc(self.h), "u": enc(self.u), "s": enc(self.s)}, sort_keys=True
        )

    def sort_key(self):
        return self.serialized()


def verify_witness(q: FormTuple, d_prime: int, n_prime: int, w: FlagWitness) -> int:
    """Exactly re-check a flag witness; returns the certified bound.

    Raises InvalidWitness if containment or the bilinear vanishing fails,
    or if the dimensions do not match the requested cell.
    """
    if w.h.ambient != q.d or w.u.ambient != q.d:
        raise InvalidWitness("witness subspaces live in the wrong ambient space")
    if w.s.ambient != q.n:
        raise InvalidWitness("coefficient space has wrong ambient dimension")
    if w.h.dim != d_prime:
        raise InvalidWitness(f"dim h = {w.h.dim}, expected {d_prime}")
    if w.s.dim != n_prime:
        raise InvalidWitness(f"dim s = {w.s.dim}, expected {n_prime}")
    if not w.h.contains(w.u):
        raise InvalidWitness("u is not contained in h")
    for c in w.s.basis:
        bc = q.combination(c).hessian
        for uvec in w.u.basis:
            row = bc.apply(uvec)
            for hvec in w.h.basis:
                if sum(r * x for r, x in zip(row, hvec)):
                    raise InvalidWitness("mixed Hessian block does not vanish")
    return w.bound


@dataclass(frozen=True)
class CertifiedValue:
    lower: int
    upper: int
    witness: FlagWitness | None = None
    level: str = LEVEL_PROBABILISTIC
    source: str = ""

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper:
            raise ValueError("need 0 <= lower <= upper")
        if self.level == LEVEL_EXACT and self.lower != self.upper:
            raise ValueError("EXACT requires lower == upper")

    @property
    def is_point(self) -> bool:
        return self.lower == self.upper

    @property
    def value(self) -> int:
        if not self.is_point:
            raise ValueError(f"interval value [{self.lower}, {self.upper}]")
        return self.upper

    def to_dict(self) -> dict:
        out = {"lower": self.lower, "upper": self.upper, "level": self.level, "source": self.source}
        if self.witness is not None:
            out["witness"] = json.loads(self.witness.serialized())
        return out


@dataclass(frozen=True)
class SearchBudget:
    random_flags: int = 10_000
    restarts: int = 100
    seed: int = 0
    exact_only: bool = False
    coordinate_limit: int = 8


DEFAULT_BUDGET = SearchBudget()


# ---------------------------------------------------------------------------
# Exact special-class solvers


def ack_cell_value(d: int, b: int, d_prime: int, n_prime: int) -> int:
    """Invariant of a quadratic monomial (ACK) system with b squares.

    For the coordinate subspace killing the m = d - d' cap-heaviest
    variables, a space of combinations depending on only l variables has
    dimension at most C(l,2) + C(m,2) + m(d-m) + min(l+m, b); monomial
    witnesses attain this, and coordinate subspaces are worst possible for
    these systems, so the cell value is the least l whose capacity reaches
    n'.
    """
    m = d - d_prime
    base = m * (m - 1) // 2 + m * (d - m)

    def capacity(l: int) -> int:
        return l * (l - 1) // 2 + base + min(l + m, b)

    for l in range(d_prime + 1):
        if n_prime <= capacity(l):
            return l
    raise ValueError("n_prime exceeds the number of forms")


def numvar_ack(k: Sequence[int], d_prime: int, n_prime: int) -> CertifiedValue:
    """Exact cell value for the ACK system with exponent cap vector k."""
    k = [int(x) for x in k]
    d = len(k)
    if d < 1 or any(x < 1 for x in k):
        raise NotACK("k must be a nonempty vector of positive integers")
    b = sum(1 for x in k if x >= 2)
    n = d * (d - 1) // 2 + b
    if n == 0:
        raise NotACK("k has no quadratic monomials")
    if not (0 <= d_prime <= d and 0 <= n_prime <= n):
        raise ValueError("cell out of range")
    value = ack_cell_value(d, b, d_prime, n_prime)
    return CertifiedValue(value, value, level=LEVEL_EXACT, source="ack")


def _ack_witness(q: FormTuple, k: Sequence[int], d_prime: int, n_prime: int, value: int) -> FlagWitness:
    """Coordinate flag witness matching the ACK formula value."""
    d = q.d
    order = sorted(range(d), key=lambda j: (k[j], j))
    kept = order[:d_prime]
    h = Subspace.span(d, [unit_vector(d, j) for j in kept])
    u_coords = kept[: d_prime - value]
    u = Subspace.span(d, [unit_vector(d, j) for j in u_coords])
    u_set = set(u_coords)
    h_set = set(kept)
    admissible = []
    for idx, f in enumerate(q.forms):
        (i, j) = next(iter(f.monomials()))
        if not ((i in u_set and j in h_set) or (j in u_set and i in h_set)):
            admissible.append(idx)
    s = Subspace.span(q.n, [unit_vector(q.n, i) for i in admissible[:n_prime]])
    return FlagWitness(h=h, u=u, s=s)


def diagonal_max_killable(coeffs: Matrix, n_prime: int) -> tuple[int, tuple[int, ...]]:
    """Largest column set of rank <= n - n' in the diagonal coefficient matrix."""
    n, d = coeffs.rows, coeffs.cols
    target = n - n_prime
    all_rows = list(range(n))
    for size in range(d, -1, -1):
        for cols in itertools.combinations(range(d), size):
            if coeffs.submatrix(all_rows, cols).rank() <= target:
                return size, cols
    raise AssertionError("unreachable: the empty set always qualifies")


def numvar_diagonal(q: FormTuple, d_prime: int, n_prime: int) -> CertifiedValue:
    """Cell value for tuples of diagonal forms.

    Exact at full dimension d' = d by column-subset enumeration.  For
    d' < d the coordinate-restriction upper bound is combined with the
    propagation lower bound value(d, n') - 2(d - d'); when they disagree
    the honest interval is returned (coordinate subspaces are not always
    optimal below full dimension).
    """
    if not q.is_diagonal():
        raise NotDiagonal("tuple has mixed terms")
    if not (0 <= d_prime <= q.d and 0 <= n_prime <= q.n):
        raise ValueError("cell out of range")
    if n_prime == 0 or d_prime == 0:
        return CertifiedValue(0, 0, level=LEVEL_EXACT, source="diagonal")
    coeffs = q.diagonal_coefficient_matrix()
    killable, cols = diagonal_max_killable(coeffs, n_prime)
    full_value = q.d - killable
    if d_prime == q.d:
        rows = [coeffs.column(j) for j in cols]
        s_space = (
            Matrix(rows).kernel() if rows else Subspace.full(q.n)
        )
        s = Subspace.span(q.n, s_space.basis[:n_prime])
        witness = FlagWitness(
            h=Subspace.full(q.d),
            u=Subspace.span(q.d, [unit_vector(q.d, j) for j in cols]),
            s=s,
        )
        assert verify_witness(q, d_prime, n_prime, witness) == full_value
        return CertifiedValue(full_value, full_value, witness=witness, level=LEVEL_EXACT, source="diagonal")
    m = q.d - d_prime
    upper = max(0, d_prime - killable)
    lower = max(0, full_value - 2 * m)
    if lower == upper:
        return CertifiedValue(lower, upper, level=LEVEL_EXACT, source="diagonal")
    return CertifiedValue(lower, upper, level=LEVEL_PROBABILISTIC, source="diagonal")


def _hpoly_mul(p: list[Fraction], q: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return out


def _pencil_minors(h1: Matrix, h2: Matrix, size: int) -> list[list[Fraction]]:
    """All size x size minor determinants of x*h1 + y*h2.

    Each minor is returned as homogeneous coefficients [c_0, ..., c_size]
    with c_t the coefficient of x^t y^(size-t).
    """
    d = h1.rows
    memo: dict[tuple, list[Fraction]] = {}

    def det(rows: tuple, cols: tuple) -> list[Fraction]:
        if not rows:
            return [Fraction(1)]
        key = (rows, cols)
        got = memo.get(key)
        if got is not None:
            return got
        total = [Fraction(0)] * (len(rows) + 1)
        r0 = rows[0]
        rest = rows[1:]
        for idx, c in enumerate(cols):
            a, b = h1[r0, c], h2[r0, c]
            if a == 0 and b == 0:
                continue
            sub = det(rest, cols[:idx] + cols[idx + 1 :])
            term = _hpoly_mul([b, a], sub)
            sgn = 1 if idx % 2 == 0 else -1
            for t, v in enumerate(term):
                total[t] += sgn * v
        memo[key] = total
        return total

    out = []
    for rows in itertools.combinations(range(d), size):
        for cols in itertools.combinations(range(d), size):
            minor = det(rows, cols)
            if any(minor):
                out.append(minor)
    return out


def analyze_pencil(h1: Matrix, h2: Matrix) -> tuple[int, list[Vector]]:
    """Minimal rank over the real pencil x*h1 + y*h2, plus rational minimizer
    directions collected at every rank level (useful as search candidates).

    Rank <= r is attained at a real point iff all (r+1)-minors share a real
    projective root; decided exactly through the gcd of the dehomogenized
    minors plus the two boundary points.
    """
    d = h1.rows
    min_rank = None
    directions: list[Vector] = []

    def note(x, y):
        v = vec([x, y])
        if v not in directions:
            directions.append(v)

    for r in range(d):
        minors = _pencil_minors(h1, h2, r + 1)
        if not minors:
            if min_rank is None:
                min_rank = r
            note(1, 0)
            note(0, 1)
            continue
        found = False
        if all(m[0] == 0 for m in minors):
            note(0, 1)
            found = True
        if all(m[-1] == 0 for m in minors):
            note(1, 0)
            found = True
        g = up.ZERO
        for m in minors:
            g = up.gcd(g, up.poly(m))
        if up.degree(g) >= 1:
            for t in up.rational_roots(g):
                note(t, 1)
                found = True
            if not found and up.has_real_root(g):
                found = True
        if found and min_rank is None:
            min_rank = r
    if min_rank is None:
        min_rank = d
        note(1, 0)
        note(0, 1)
    return min_rank, directions


def pencil_min_rank(h1: Matrix, h2: Matrix) -> int:
    return analyze_pencil(h1, h2)[0]


def numvar_pair(q: FormTuple, d_prime: int, n_prime: int) -> CertifiedValue:
    """Exact full-dimension cells for a pair of forms.

    n' = 1 is the minimal rank over the real pencil; n' = 2 is the minimal
    variable count of the whole tuple.  Only d' = d is supported here; the
    general pipeline covers restricted cells.
    """
    if q.n != 2:
        raise NotPair("tuple does not have exactly two forms")
    if d_prime != q.d:
        raise ValueError("pair solver only covers d' = d")
    if n_prime == 0:
        return CertifiedValue(0, 0, level=LEVEL_EXACT, source="pair")
    if n_prime == 2:
        v = minimal_variables(q)
        return CertifiedValue(v, v, level=LEVEL_EXACT, source="pair")
    if n_prime != 1:
        raise ValueError("cell out of range")
    v = pencil_min_rank(q.forms[0].hessian, q.forms[1].hessian)
    return CertifiedValue(v, v, level=LEVEL_EXACT, source="pair")


# ---------------------------------------------------------------------------
# Structured witness search


def _canonical_direction(v: Vector) -> Vector | None:
    lead = next((x for x in v if x != 0), None)
    if lead is None:
        return None
    return tuple(x / lead for x in v)


def isotropic_subspace_variants(m: Matrix, cap: int = 8) -> list[Subspace]:
    """Several maximal rational totally isotropic subspaces of a form.

    Varies the chosen side of each hyperbolic block; every variant is a
    valid totally isotropic subspace and under a change of basis the set
    of variants transforms covariantly.
    """
    blocks = _congruence_blocks(m)
    base: list[Vector] = []
    hyps: list[tuple[Vector, Vector]] = []
    pos_entries = []
    neg_entries = []
    for block in blocks:
        if block[0] == "zero":
            base.append(block[1])
        elif block[0] == "hyp":
            hyps.append((block[1], block[2]))
        else:
            (pos_entries if block[1] > 0 else neg_entries).append((block[1], block[2]))
    extra: list[Vector] = []
    used = [False] * len(neg_entries)
    for pval, pvec_ in pos_entries:
        for kk, (nval, nvec_) in enumerate(neg_entries):
            if used[kk]:
                continue
            ratio = -pval / nval
            num, den = ratio.numerator, ratio.denominator
            rn, rd = _isqrt_exact(num), _isqrt_exact(den)
            if rn is not None and rd is not None:
                extra.append(vec_add(pvec_, vec_scale(Fraction(rn, rd), nvec_)))
                used[kk] = True
                break
    out = []
    n_h = len(hyps)
    for sides in itertools.product((0, 1), repeat=min(n_h, 3)):
        chosen = list(base) + list(extra)
        for i, (a, b) in enumerate(hyps):
            chosen.append((a, b)[sides[i]] if i < len(sides) else a)
        out.append(Subspace.span(m.rows, chosen))
        if len(out) >= cap:
            break
    if not out:
        out.append(Subspace.span(m.rows, base + extra))
    seen = set()
    uniq = []
    for s in out:
        if s.basis not in seen:
            seen.add(s.basis)
            uniq.append(s)
    return uniq


def _isqrt_exact(n: int) -> int | None:
    import math

    if n < 0:
        return None
    r = math.isqrt(n)
    return r if r * r == n else None


class _SearchContext:
    """Shared candidate pools for one tuple; all orderings deterministic."""

    def __init__(self, q: FormTuple, budget: SearchBudget):
        self.q = q
        self.budget = budget
        d, n = q.d, q.n
        self.is_diagonal = q.is_diagonal()
        self.span_kernel = q.span_kernel()
        self.pencil_rank = None
        if n == 2:
            self.pencil_rank = pencil_min_rank(q.forms[0].hessian, q.forms[1].hessian)
        self.c_pool = self._build_c_pool()
        self.c_signatures = {c: signature(q.combination(c).hessian) for c in self.c_pool}
        self.space_pool = self._build_space_pool()
        self.h_by_dim: dict[int, list[Subspace]] = {}
        for k in range(d + 1):
            self.h_by_dim[k] = self._h_candidates(k)
        self.s_pool = self._build_s_pool()

    def _build_c_pool(self) -> list[Vector]:
        """Coefficient directions worth trying, in a deterministic order.

        Besides unit directions, this injects the canonical (echelon) basis
        of the form span, which makes the pool independent of any invertible
        mixing of the presentation, and exact rational minimizers of every
        two-dimensional pencil slice through those directions.
        """
        q = self.q
        n = q.n
        pool: list[Vector] = []

        def push(v):
            cv = _canonical_direction(vec(v))
            if cv is not None and cv not in pool:
                pool.append(cv)

        slice_dirs: list[Vector] = []
        for i in range(n):
            uv = unit_vector(n, i)
            push(uv)
            slice_dirs.append(uv)
        canonical = _canonical_mixing(q)
        if canonical is not None:
            _, t = canonical
            for i in range(n):
                row = t.row(i)
                push(row)
                slice_dirs.append(row)
        for c in self.span_kernel.basis:
            push(c)
        hessians = {}

        def hess(c):
            if c not in hessians:
                hessians[c] = q.combination(c).hessian
            return hessians[c]

        for a, b in itertools.combinations(range(len(slice_dirs)), 2):
            ca, cb = slice_dirs[a], slice_dirs[b]
            _, dirs = analyze_pencil(hess(ca), hess(cb))
            for lam, mu in dirs:
                push(tuple(lam * x + mu * y for x, y in zip(ca, cb)))
        for i in range(n):
            for j in range(i + 1, n):
                e = [Fraction(0)] * n
                e[i] = e[j] = Fraction(1)
                push(e)
                e2 = list(e)
                e2[j] = Fraction(-1)
                push(e2)
        push([Fraction(1)] * n)
        return pool

    def _build_space_pool(self) -> list[Subspace]:
        q = self.q
        d = q.d
        distinguished: list[Subspace] = []

        def push(space, collection):
            if space.ambient == d and space not in collection:
                collection.append(space)

        push(common_radical(q), distinguished)
        for c in self.c_pool[:12]:
            bc = q.combination(c).hessian
            push(bc.kernel(), distinguished)
            for iso in isotropic_subspace_variants(bc, cap=4):
                push(iso, distinguished)
        pool = list(distinguished)
        base = distinguished[:12]
        for a, b in itertools.combinations(range(len(base)), 2):
            push(base[a].intersect(base[b]), pool)
            push(base[a].add(base[b]), pool)
        # refinement: isotropic/radical structure of one form restricted to
        # another form's candidate space, mapped back to the ambient space
        for w in base:
            if w.dim < 1:
                continue
            bw = w.basis_matrix()
            bwt = bw.transpose()
            for c in self.c_pool[:8]:
                r = bwt @ self.q.combination(c).hessian @ bw
                for iso in isotropic_subspace_variants(r, cap=2):
                    if iso.dim:
                        lifted = [bw.apply(v) for v in iso.basis]
                        push(Subspace.span(d, lifted), pool)
        if d <= self.budget.coordinate_limit:
            for size in range(d + 1):
                for idx in itertools.combinations(range(d), size):
                    push(Subspace.span(d, [unit_vector(d, i) for i in idx]), pool)
        push(Subspace.full(d), pool)
        push(Subspace.zero(d), pool)
        return pool

    def _h_candidates(self, dprime: int) -> list[Subspace]:
        d = self.q.d
        out: list[Subspace] = []
        seen = set()

        def push(space):
            if space.dim == dprime and space.basis not in seen:
                seen.add(space.basis)
                out.append(space)

        for w in self.space_pool:
            push(w)
        vectors: list[Vector] = []
        for w in self.space_pool:
            for b in w.basis:
                cb = _canonical_direction(b)
                if cb is not None and cb not in vectors:
                    vectors.append(cb)
        for i in range(d):
            uv = unit_vector(d, i)
            if uv not in vectors:
                vectors.append(uv)
        # grow smaller candidate spaces deterministically
        for w in self.space_pool:
            if w.dim < dprime:
                cur = w
                for v in vectors:
                    if cur.dim == dprime:
                        break
                    if not cur.contains_vector(v):
                        cur = cur.add(Subspace.span(d, [v]))
                push(cur)
        # shrink larger ones through basis subsets
        for w in self.space_pool:
            if dprime < w.dim and len(w.basis) <= 8:
                for subset in itertools.combinations(w.basis, dprime):
                    push(Subspace.span(d, list(subset)))
        return out[:80]

    def _build_s_pool(self) -> list[Subspace]:
        n = self.q.n
        pool: list[Subspace] = []
        seen = set()

        def push(space):
            if space.dim >= 1 and space.basis not in seen:
                seen.add(space.basis)
                pool.append(space)

        push(Subspace.full(n))
        priority = self.c_pool[:10]
        for size in range(1, n + 1):
            count = 0
            for subset in itertools.combinations(priority, size):
                space = Subspace.span(n, list(subset))
                if space.dim == size:
                    push(space)
                    count += 1
                if count >= 40:
                    break
        if self.span_kernel.dim:
            push(self.span_kernel)
        return pool


@dataclass
class _Candidate:
    bound: int
    h: Subspace
    u: Subspace
    s_dim: int
    s: Subspace


def _restricted_hessians(q: FormTuple, h: Subspace) -> list[Matrix]:
    bh = h.basis_matrix()
    bht = bh.transpose()
    return [bht @ f.hessian @ bh for f in q.forms]


def _umax_dim_and_coords(
    hdim: int, restricted: list[Matrix], s: Subspace
) -> list[list[Fraction]]:
    """Kernel basis (in h coordinates) of the mixed-block constraints."""
    from .matrices import _rref

    zero = Fraction(0)
    rows: list[list[Fraction]] = []
    for c in s.basis:
        block = [[zero] * hdim for _ in range(hdim)]
        for ci, m in zip(c, restricted):
            if ci:
                for i in range(hdim):
                    mi = m.entries[i]
                    bi = block[i]
                    for j in range(hdim):
                        if mi[j]:
                            bi[j] += ci * mi[j]
        rows.extend(block)
    if not rows:
        return [[Fraction(1) if i == j else zero for j in range(hdim)] for i in range(hdim)]
    reduced, pivots = _rref(rows)
    free = [c for c in range(hdim) if c not in pivots]
    basis = []
    for fc in free:
        v = [zero] * hdim
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -reduced[r][fc]
        basis.append(v)
    return basis


def _umax_for(q: FormTuple, h: Subspace, restricted: list[Matrix], s: Subspace) -> Subspace:
    """Largest u <= h with vanishing mixed blocks for every c in s."""
    coords = _umax_dim_and_coords(h.dim, restricted, s)
    if not coords:
        return Subspace.zero(q.d)
    bh = h.basis_matrix()
    return Subspace.span(q.d, [bh.apply(vec(v)) for v in coords])


def _admissible_space(q: FormTuple, h: Subspace, u: Subspace) -> Subspace:
    """All coefficient vectors whose form has vanishing mixed (u, h) block."""
    rows = []
    for uvec in u.basis:
        for hvec in h.basis:
            rows.append([vec_dot_triple(f.hessian, uvec, hvec) for f in q.forms])
    if not rows:
        return Subspace.full(q.n)
    return Matrix(rows).kernel()


def vec_dot_triple(m: Matrix, a: Vector, b: Vector) -> Fraction:
    return sum((x * y for x, y in zip(m.apply(b), a)), Fraction(0))


def _sound_lower_bound(ctx: _SearchContext, d_prime: int, n_prime: int) -> int:
    """Largest lower bound provable by the sound structural rules."""
    q = ctx.q
    if n_prime == 0 or d_prime == 0:
        return 0
    m = q.d - d_prime
    lb = 0
    if n_prime == q.n:
        for sig in ctx.c_signatures.values():
            lb = max(lb, max(sig.positives - m, 0) + max(sig.negatives - m, 0))
    if q.n == 1:
        sig = signature(q.forms[0].hessian)
        lb = max(lb, max(sig.positives - m, 0) + max(sig.negatives - m, 0))
    if ctx.pencil_rank is not None and n_prime >= 1:
        lb = max(lb, ctx.pencil_rank - 2 * m)
    if ctx.is_diagonal and n_prime >= 1:
        killable, _ = diagonal_max_killable(q.diagonal_coefficient_matrix(), n_prime)
        lb = max(lb, (q.d - killable) - 2 * m)
    if d_prime == q.d and n_prime == q.n:
        lb = max(lb, minimal_variables(q))
    return min(lb, d_prime)


def _search_candidates(ctx: _SearchContext) -> list[_Candidate]:
    """One structured sweep over flag candidates, shared by all cells."""
    q = ctx.q
    out: list[_Candidate] = []
    for dprime in range(1, q.d + 1):
        for h in ctx.h_by_dim[dprime]:
            restricted = _restricted_hessians(q, h)
            for s in ctx.s_pool:
                u = _umax_for(q, h, restricted, s)
                out.append(_Candidate(dprime - u.dim, h, u, s.dim, s))
    return out


def _refine_candidates(ctx: _SearchContext, cands: list[_Candidate]) -> list[_Candidate]:
    """Alternation: derive admissible coefficient spaces from found flags."""
    q = ctx.q
    extra: list[_Candidate] = []
    seen = set()
    for cand in cands:
        if cand.u.dim == 0:
            continue
        key = (cand.h.basis, cand.u.basis)
        if key in seen:
            continue
        seen.add(key)
        adm = _admissible_space(q, cand.h, cand.u)
        if adm.dim > cand.s_dim:
            extra.append(_Candidate(cand.bound, cand.h, cand.u, adm.dim, adm))
    return extra


def _random_stage(
    ctx: _SearchContext,
    pending: dict[tuple[int, int], int],
    best: dict[tuple[int, int], tuple[int, "_Candidate | None"]],
) -> None:
    """Seeded random flag draws for cells the structured sweep left gapped.

    Stops early after a stretch of improvement-free restarts; every found
    flag is exact-verified downstream like any other candidate.
    """
    q = ctx.q
    budget = ctx.budget
    rng = random.Random(("numvar-search", budget.seed))
    s_shortlist = ctx.s_pool[:6]
    draws = 0
    stale = 0
    for _ in range(budget.restarts):
        needed_dims = sorted(
            {cell[0] for cell, (bound, _) in best.items() if bound > pending[cell]}
        )
        if not needed_dims or draws >= budget.random_flags or stale >= 10:
            return
        improved = False
        for dprime in needed_dims:
            if draws >= budget.random_flags:
                break
            vectors = [vec([rng.randint(-3, 3) for _ in range(q.d)]) for _ in range(dprime)]
            h = Subspace.span(q.d, vectors)
            if h.dim != dprime:
                continue
            restricted = _restricted_hessians(q, h)
            for s in s_shortlist:
                u = _umax_for(q, h, restricted, s)
                cand = _Candidate(dprime - u.dim, h, u, s.dim, s)
                draws += 1
                for cell in pending:
                    dp, np_ = cell
                    if cand.h.dim >= dp and cand.s_dim >= np_:
                        bound = max(0, dp - cand.u.dim)
                        if bound < best[cell][0]:
                            best[cell] = (bound, cand)
                            improved = True
        stale = 0 if improved else stale + 1


def _shrink_witness(q: FormTuple, cand: _Candidate, d_prime: int, n_prime: int) -> FlagWitness | None:
    """Specialize a found flag to the cell (d', n'), keeping validity."""
    if cand.h.dim < d_prime or cand.s.dim < n_prime:
        return None
    u = cand.u
    if u.dim > d_prime:
        u = Subspace.span(q.d, list(u.basis[:d_prime]))
    h = u
    for b in cand.h.basis:
        if h.dim == d_prime:
            break
        if not h.contains_vector(b):
            h = h.add(Subspace.span(q.d, [b]))
    if h.dim != d_prime:
        return None
    s = Subspace.span(q.n, list(cand.s.basis[:n_prime]))
    if s.dim != n_prime:
        return None
    return FlagWitness(h=h, u=u, s=s)


def _trivial_witness(q: FormTuple, d_prime: int, n_prime: int) -> FlagWitness:
    h = Subspace.span(q.d, [unit_vector(q.d, i) for i in range(d_prime)])
    s = Subspace.span(q.n, [unit_vector(q.n, i) for i in range(n_prime)])
    return FlagWitness(h=h, u=Subspace.zero(q.d), s=s)


# ---------------------------------------------------------------------------
# The per-cell pipeline and the full table


@dataclass(frozen=True)
class NumvarTable:
    tuple: FormTuple
    entries: dict[tuple[int, int], CertifiedValue] = field(compare=False)

    def entry(self, d_prime: int, n_prime: int) -> CertifiedValue:
        return self.entries[(d_prime, n_prime)]

    def value(self, d_prime: int, n_prime: int) -> int:
        return self.entry(d_prime, n_prime).value

    def bounds(self, d_prime: int, n_prime: int) -> tuple[int, int]:
        e = self.entry(d_prime, n_prime)
        return e.lower, e.upper

    @property
    def is_fully_certified(self) -> bool:
        return all(e.is_point for e in self.entries.values())

    def row(self, d_prime: int) -> list[int]:
        return [self.value(d_prime, n_prime) for n_prime in range(self.tuple.n + 1)]

    def to_dict(self) -> dict:
        return {
            "d": self.tuple.d,
            "n": self.tuple.n,
            "tuple": json.loads(self.tuple.to_json()),
            "cells": {
                f"{dp},{np_}": cv.to_dict() for (dp, np_), cv in sorted(self.entries.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _exact_cell(q: FormTuple, ctx: _SearchContext, d_prime: int, n_prime: int) -> CertifiedValue | None:
    if n_prime == 0 or d_prime == 0:
        return CertifiedValue(0, 0, level=LEVEL_EXACT, source="trivial")
    if n_prime <= ctx.span_kernel.dim:
        s = Subspace.span(q.n, list(ctx.span_kernel.basis[:n_prime]))
        h = Subspace.span(q.d, [unit_vector(q.d, i) for i in range(d_prime)])
        w = FlagWitness(h=h, u=h, s=s)
        return CertifiedValue(0, 0, witness=w, level=LEVEL_EXACT, source="zero-combinations")
    k = ack_exponent_vector(q)
    if k is not None:
        cv = numvar_ack(k, d_prime, n_prime)
        witness = _ack_witness(q, k, d_prime, n_prime, cv.value)
        assert verify_witness(q, d_prime, n_prime, witness) == cv.value
        return replace(cv, witness=witness)
    if ctx.is_diagonal and d_prime == q.d:
        return numvar_diagonal(q, d_prime, n_prime)
    if q.n == 1:
        sig = signature(q.forms[0].hessian)
        m = q.d - d_prime
        v = max(sig.positives - m, 0) + max(sig.negatives - m, 0)
        return CertifiedValue(v, v, level=LEVEL_EXACT, source="signature")
    if q.n == 2 and d_prime == q.d:
        return numvar_pair(q, d_prime, n_prime)
    if d_prime == q.d and n_prime == q.n:
        v = minimal_variables(q)
        return CertifiedValue(v, v, level=LEVEL_EXACT, source="minimal-variables")
    return None


def _kernel_reduction(q: FormTuple) -> tuple[FormTuple | None, int, list[int]] | None:
    """Drop dependent forms: invariants shift by the kernel dimension."""
    k0 = q.span_kernel().dim
    if k0 == 0:
        return None
    coeffs = q.coefficient_matrix()
    _, pivots = coeffs.transpose().rref()
    keep = list(pivots)
    reduced = FormTuple(tuple(q.forms[i] for i in keep)) if keep else None
    return reduced, k0, keep


def _canonical_mixing(q: FormTuple) -> tuple[FormTuple, Matrix] | None:
    """Replace an independent tuple by the canonical basis of its span.

    The invariants depend only on the span of the forms and the count n',
    so they may be computed on the reduced-row-echelon basis of the
    coefficient span; this makes the engine's output independent of the
    presentation mixing.  Returns (canonical tuple, T) with canonical
    forms = T . q, or None when q is already canonical.
    """
    coeffs = q.coefficient_matrix()
    rref_rows, _ = coeffs.rref()
    if rref_rows.rows != q.n:
        raise ValueError("tuple has dependent forms; reduce first")
    if rref_rows.entries == coeffs.entries:
        return None
    ct = coeffs.transpose()
    t_rows = []
    for i in range(q.n):
        sol = ct.solve(rref_rows.row(i))
        if sol is None:
            raise AssertionError("row space changed under rref")
        t_rows.append(sol)
    t = Matrix(t_rows)
    canonical = FormTuple(tuple(q.combination(t.row(i)) for i in range(q.n)))
    return canonical, t


def _lift_reduced_witness(
    q: FormTuple, keep: Sequence[int], kernel_basis: Sequence[Vector], w: FlagWitness, n_prime: int
) -> FlagWitness | None:
    """Port a witness of the independent sub-tuple back to the full tuple.

    Coefficient vectors are re-embedded on the kept indices; extra kernel
    directions pad the coefficient space up to n' (they contribute zero
    forms, so the bilinear vanishing is unaffected).
    """
    lifted = []
    for c in w.s.basis:
        full = [Fraction(0)] * q.n
        for value, idx in zip(c, keep):
            full[idx] = value
        lifted.append(tuple(full))
    lifted.extend(kernel_basis)
    s = Subspace.span(q.n, lifted[: max(n_prime, len(w.s.basis))])
    if s.dim < n_prime:
        s = Subspace.span(q.n, lifted)
    if s.dim < n_prime:
        return None
    s = Subspace.span(q.n, list(s.basis[:n_prime]))
    return FlagWitness(h=w.h, u=w.u, s=s)


def numvar_table(q: FormTuple, budget: SearchBudget = DEFAULT_BUDGET) -> NumvarTable:
    """Fill the whole (d+1) x (n+1) grid of certified invariant values."""
    reduction = _kernel_reduction(q)
    if reduction is not None:
        reduced, k0, keep = reduction
        kernel_basis = list(q.span_kernel().basis)
        inner = numvar_table(reduced, budget) if reduced is not None else None
        entries: dict[tuple[int, int], CertifiedValue] = {}
        for dp in range(q.d + 1):
            for np_ in range(q.n + 1):
                if np_ == 0 or dp == 0:
                    entries[(dp, np_)] = CertifiedValue(0, 0, level=LEVEL_EXACT, source="trivial")
                elif np_ <= k0:
                    s = Subspace.span(q.n, kernel_basis[:np_])
                    h = Subspace.span(q.d, [unit_vector(q.d, i) for i in range(dp)])
                    w = FlagWitness(h=h, u=h, s=s)
                    entries[(dp, np_)] = CertifiedValue(
                        0, 0, witness=w, level=LEVEL_EXACT, source="zero-combinations"
                    )
                else:
                    base = inner.entry(dp, np_ - k0)
                    witness = None
                    if base.witness is not None:
                        witness = _lift_reduced_witness(q, keep, kernel_basis, base.witness, np_)
                        if witness is not None:
                            verify_witness(q, dp, np_, witness)
                    entries[(dp, np_)] = replace(
                        base, witness=witness, source=f"reduced:{base.source}"
                    )
        return NumvarTable(tuple=q, entries=entries)

    ctx = _ctx_cache(q, budget)
    entries = {}
    pending: dict[tuple[int, int], int] = {}
    for dp in range(q.d + 1):
        for np_ in range(q.n + 1):
            cell = _exact_cell(q, ctx, dp, np_)
            if cell is not None:
                entries[(dp, np_)] = cell
            else:
                pending[(dp, np_)] = _sound_lower_bound(ctx, dp, np_)

    if pending:
        candidates = _search_candidates(ctx)
        candidates += _refine_candidates(ctx, candidates)
        best: dict[tuple[int, int], tuple[int, _Candidate | None]] = {
            cell: (cell[0], None) for cell in pending
        }
        for cand in candidates:
            for cell in pending:
                dp, np_ = cell
                if cand.h.dim >= dp and cand.s_dim >= np_:
                    bound = max(0, dp - cand.u.dim)
                    if bound < best[cell][0]:
                        best[cell] = (bound, cand)
        _random_stage(ctx, pending, best)
        for cell, lower in pending.items():
            dp, np_ = cell
            bound, cand = best[cell]
            witness = None
            if cand is not None:
                witness = _shrink_witness(q, cand, dp, np_)
            if witness is None:
                witness = _trivial_witness(q, dp, np_)
                bound = dp
            checked = verify_witness(q, dp, np_, witness)
            assert checked == bound, (checked, bound)
            level = LEVEL_WITNESS_UB if lower == bound else LEVEL_PROBABILISTIC
            entries[cell] = CertifiedValue(
                lower, bound, witness=witness, level=level, source="flag-search"
            )

    _monotone_pass(q, entries)
    return NumvarTable(tuple=q, entries=entries)


_CTX_CACHE: dict[tuple, _SearchContext] = {}


def _ctx_cache(q: FormTuple, budget: SearchBudget) -> _SearchContext:
    key = (q.to_json(), budget)
    ctx = _CTX_CACHE.get(key)
    if ctx is None:
        ctx = _SearchContext(q, budget)
        if len(_CTX_CACHE) > 64:
            _CTX_CACHE.clear()
        _CTX_CACHE[key] = ctx
    return ctx


def _monotone_pass(q: FormTuple, entries: dict[tuple[int, int], CertifiedValue]) -> None:
    """Propagate bounds along the monotone directions of the grid."""
    changed = True
    while changed:
        changed = False
        for dp in range(q.d + 1):
            for np_ in range(q.n + 1):
                cv = entries[(dp, np_)]
                lower, upper = cv.lower, cv.upper
                if dp > 0:
                    lower = max(lower, entries[(dp - 1, np_)].lower)
                if np_ > 0:
                    lower = max(lower, entries[(dp, np_ - 1)].lower)
                if dp < q.d:
                    upper = min(upper, entries[(dp + 1, np_)].upper)
                if np_ < q.n:
                    upper = min(upper, entries[(dp, np_ + 1)].upper)
                upper = min(upper, dp)
                if (lower, upper) != (cv.lower, cv.upper):
                    if lower > upper:
                        raise AssertionError(
                            f"certified bounds crossed at cell ({dp},{np_}): {lower} > {upper}"
                        )
                    level = cv.level
                    witness = cv.witness
                    if upper != cv.upper:
                        witness = None
                        level = LEVEL_WITNESS_UB if lower == upper else LEVEL_PROBABILISTIC
                    elif lower == upper and level == LEVEL_PROBABILISTIC:
                        level = LEVEL_WITNESS_UB
                    entries[(dp, np_)] = CertifiedValue(
                        lower, upper, witness=witness, level=level,
                        source=cv.source + "+monotone",
                    )
                    changed = True


def numvar(
    q: FormTuple, d_prime: int, n_prime: int, budget: SearchBudget = DEFAULT_BUDGET
) -> CertifiedValue:
    """Certified invariant of a single cell (computed through the table)."""
    if not (0 <= d_prime <= q.d and 0 <= n_prime <= q.n):
        raise ValueError("cell out of range")
    return numvar_table(q, budget).entry(d_prime, n_prime)
