"""Small exact univariate polynomial toolkit over the rationals.

Polynomials are tuples of Fractions, lowest degree first, with no trailing
zeros.  Just enough machinery for the matrix-pencil minimal-rank test:
gcds, Sturm chains, real-root existence and rational-root extraction.
"""

from __future__ import annotations

import math
from fractions import Fraction

Poly = tuple[Fraction, ...]

ZERO: Poly = ()


def poly(coeffs) -> Poly:
    c = [Fraction(x) for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def degree(p: Poly) -> int:
    """Degree, with deg 0 = -1 for the zero polynomial."""
    return len(p) - 1


def is_zero(p: Poly) -> bool:
    return not p


def add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return poly([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def neg(p: Poly) -> Poly:
    return tuple(-x for x in p)


def sub(p: Poly, q: Poly) -> Poly:
    return add(p, neg(q))


def mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ZERO
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return poly(out)


def scale(c, p: Poly) -> Poly:
    c = Fraction(c)
    if c == 0:
        return ZERO
    return tuple(c * x for x in p)


def divmod_poly(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    rem = list(p)
    quo = [Fraction(0)] * max(0, len(p) - len(q) + 1)
    dq = len(q) - 1
    lead = q[-1]
    for k in range(len(rem) - 1, dq - 1, -1):
        if rem[k] == 0:
            continue
        f = rem[k] / lead
        quo[k - dq] = f
        for i in range(dq + 1):
            rem[k - dq + i] -= f * q[i]
    return poly(quo), poly(rem)


def monic(p: Poly) -> Poly:
    if not p:
        return ZERO
    return tuple(x / p[-1] for x in p)


def gcd(p: Poly, q: Poly) -> Poly:
    """Monic gcd by the Euclidean algorithm."""
    a, b = p, q
    while b:
        a, b = b, divmod_poly(a, b)[1]
    return monic(a)


def derivative(p: Poly) -> Poly:
    return poly([i * p[i] for i in range(1, len(p))])


def squarefree_part(p: Poly) -> Poly:
    if degree(p) < 1:
        return monic(p)
    g = gcd(p, derivative(p))
    if degree(g) < 1:
        return monic(p)
    return monic(divmod_poly(p, g)[0])


def eval_poly(p: Poly, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _sturm_chain(p: Poly) -> list[Poly]:
    chain = [p, derivative(p)]
    while chain[-1]:
        rem = divmod_poly(chain[-2], chain[-1])[1]
        if not rem:
            break
        chain.append(neg(rem))
    return [c for c in chain if c]


def _sign_variations(signs: list[int]) -> int:
    signs = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a * b < 0)


def count_real_roots(p: Poly) -> int:
    """Number of distinct real roots, by Sturm's theorem."""
    sf = squarefree_part(p)
    if degree(sf) < 1:
        return 0
    chain = _sturm_chain(sf)

    def sign_at_inf(q: Poly, positive: bool) -> int:
        lead = q[-1]
        s = 1 if lead > 0 else -1
        if not positive and degree(q) % 2 == 1:
            s = -s
        return s

    at_minus = [sign_at_inf(q, positive=False) for q in chain]
    at_plus = [sign_at_inf(q, positive=True) for q in chain]
    return _sign_variations(at_minus) - _sign_variations(at_plus)


def has_real_root(p: Poly) -> bool:
    if degree(p) < 1:
        return False
    if degree(p) % 2 == 1:
        return True
    return count_real_roots(p) > 0


def _divisors(n: int, cap: int = 400) -> list[int]:
    n = abs(n)
    out = []
    for k in range(1, math.isqrt(n) + 1):
        if n % k == 0:
            out.append(k)
            out.append(n // k)
            if len(out) > cap:
                return sorted(set(out))
    return sorted(set(out))


def rational_roots(p: Poly) -> list[Fraction]:
    """All rational roots (exact, via the rational root theorem)."""
    if degree(p) < 1:
        return []
    roots = []
    work = list(p)
    while work and work[0] == 0:
        work.pop(0)
        if Fraction(0) not in roots:
            roots.append(Fraction(0))
    q = poly(work)
    if degree(q) < 1:
        return sorted(roots)
    lcm = 1
    for c in q:
        lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in q]
    for pnum in _divisors(ints[0]):
        for pden in _divisors(ints[-1]):
            for cand in (Fraction(pnum, pden), Fraction(-pnum, pden)):
                if cand not in roots and eval_poly(q, cand) == 0:
                    roots.append(cand)
    return sorted(roots)
