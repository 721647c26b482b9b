"""Exact combinatorics of the asymptotic generic Newton polygon.

Every monomial A^m of H^s_ij has weighted degree r_ij + d*s when A_k has
weight d - k.  Writing h_ij(u) = sum_s H^s_ij u^s, the polynomial f_n^t is
the coefficient of u^t in the sum over sigma of sgn(sigma) u^(s_0(sigma))
prod_i h_{i,sigma(i)}(u), where s_0(sigma) is the excess of the assignment
value over its minimum divided by d.  One routine therefore serves symbolic
expansion, evaluation at rational points and evaluation over F_q.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .errors import Finding
from .ffield import GF, find_irreducible, is_prime
from .linalg import permutation_sign
from .polygon import Polygon, frac_str, hodge_polygon, lies_above, lower_hull

SZ_PRIME = (1 << 61) - 1
SZ_TRIALS = 4


# -- residue tables ---------------------------------------------------------------

@dataclass(frozen=True)
class ResidueTable:
    d: int
    r: int
    r_ij: tuple[tuple[int, ...], ...]
    r_prime: tuple[tuple[int, ...], ...]
    delta: tuple[tuple[int, ...], ...]

    def R(self, i: int, j: int) -> int:
        """r_ij with 1-based indices."""
        return self.r_ij[i - 1][j - 1]

    def D(self, i: int, j: int) -> int:
        return self.delta[i - 1][j - 1]


@lru_cache(maxsize=None)
def residue_table(d: int, r: int) -> ResidueTable:
    if not 1 <= r <= d - 1:
        raise ValueError(f"need 1 <= r <= d-1, got r={r}, d={d}")
    if math.gcd(r, d) != 1:
        raise ValueError(f"gcd(r, d) = {math.gcd(r, d)} != 1")
    idx = range(1, d)
    rij = tuple(tuple(-(r * i - j) % d for j in idx) for i in idx)
    rp = tuple(tuple((r * i - j) % d for j in idx) for i in idx)
    dl = tuple(tuple(1 if j >= rp[i - 1][0] + 1 else 0 for j in idx) for i in idx)
    return ResidueTable(d, r, rij, rp, dl)


# -- sparse rational polynomials ------------------------------------------------

class SparseRatPoly:
    """Polynomial in A_1..A_n over Q as {exponent tuple: Fraction}."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: dict | None = None):
        self.n = n
        self.terms = {k: Fraction(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def const(cls, n: int, c) -> "SparseRatPoly":
        return cls(n, {(0,) * n: Fraction(c)})

    @classmethod
    def var(cls, n: int, k: int) -> "SparseRatPoly":
        """A_k, 1-based."""
        e = [0] * n
        e[k - 1] = 1
        return cls(n, {tuple(e): Fraction(1)})

    def _coerce(self, other) -> "SparseRatPoly":
        if isinstance(other, SparseRatPoly):
            return other
        return SparseRatPoly.const(self.n, other)

    def __add__(self, other) -> "SparseRatPoly":
        other = self._coerce(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return SparseRatPoly(self.n, out)

    __radd__ = __add__

    def __neg__(self) -> "SparseRatPoly":
        return SparseRatPoly(self.n, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other) -> "SparseRatPoly":
        return self + (-self._coerce(other))

    def __mul__(self, other) -> "SparseRatPoly":
        if not isinstance(other, SparseRatPoly):
            c = Fraction(other)
            return SparseRatPoly(self.n, {k: v * c for k, v in self.terms.items()})
        out: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + v1 * v2
        return SparseRatPoly(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "SparseRatPoly":
        out = SparseRatPoly.const(self.n, 1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return self.terms == self._coerce(other).terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=-1)

    def weighted_degrees(self, weights: Sequence[int]) -> set[int]:
        return {sum(w * e for w, e in zip(weights, k)) for k in self.terms}

    def denominator(self) -> int:
        return math.lcm(*(v.denominator for v in self.terms.values())) if self.terms else 1

    def evaluate(self, point: Sequence, zero=Fraction(0)):
        """Value at ``point`` in any ring supporting +, * and int powers."""
        total = zero
        for k, v in self.terms.items():
            term = v
            for x, e in zip(point, k):
                if e:
                    term = x ** e * term
            total = total + term
        return total

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, key=lambda e: (sum(e), e)):
            mono = "*".join(f"A{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(k) if e)
            c = self.terms[k]
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    __repr__ = __str__

    def to_json(self) -> list:
        return [[list(k), frac_str(v)] for k, v in sorted(self.terms.items())]


# -- scalar rings used for evaluation -------------------------------------------

class ModP:
    """Element of Z/P for a prime P; used for randomized identity tests."""

    __slots__ = ("P", "v")

    def __init__(self, P: int, v: int):
        self.P, self.v = P, v % P

    def _c(self, o) -> int:
        if isinstance(o, ModP):
            return o.v
        if isinstance(o, Fraction):
            return o.numerator * pow(o.denominator, -1, self.P)
        return int(o)

    def __add__(self, o):
        return ModP(self.P, self.v + self._c(o))

    __radd__ = __add__

    def __sub__(self, o):
        return ModP(self.P, self.v - self._c(o))

    def __neg__(self):
        return ModP(self.P, -self.v)

    def __mul__(self, o):
        return ModP(self.P, self.v * self._c(o))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        return ModP(self.P, pow(self.v, e, self.P))

    def is_zero(self) -> bool:
        return self.v == 0


class FqElem:
    """Element of GF(p^a) with operators, for residue-vector membership."""

    __slots__ = ("F", "x")

    def __init__(self, F: GF, x):
        self.F, self.x = F, F.elem(x)

    def _c(self, o):
        F = self.F
        if isinstance(o, FqElem):
            return o.x
        o = Fraction(o)
        if o.denominator % F.p == 0:
            raise ValueError(f"coefficient {o} is not {F.p}-integral")
        return F.elem((o.numerator * pow(o.denominator, -1, F.p) % F.p,))

    def __add__(self, o):
        return FqElem(self.F, self.F.add(self.x, self._c(o)))

    __radd__ = __add__

    def __sub__(self, o):
        return FqElem(self.F, self.F.sub(self.x, self._c(o)))

    def __neg__(self):
        return FqElem(self.F, self.F.sub(self.F.zero, self.x))

    def __mul__(self, o):
        return FqElem(self.F, self.F.mul(self.x, self._c(o)))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        return FqElem(self.F, self.F.pow(self.x, e))

    def is_zero(self) -> bool:
        return not any(self.x)


def _is_zero(x) -> bool:
    if hasattr(x, "is_zero"):
        return x.is_zero()
    return x == 0


# -- H^s_ij --------------------------------------------------------------------

@lru_cache(maxsize=None)
def _weight_vectors(d: int, W: int) -> tuple[tuple[int, ...], ...]:
    """All m in Z>=0^(d-1) with sum_l l*m_(d-l) = W, indexed m_1..m_(d-1)."""
    # weight of A_k is d - k
    out = []

    def rec(k: int, rest: int, acc: list[int]):
        if k == 0:
            if rest == 0:
                out.append(tuple(acc))
            return
        w = d - k
        for e in range(rest // w + 1):
            acc[k - 1] = e
            rec(k - 1, rest - w * e, acc)
        acc[k - 1] = 0

    rec(d - 1, W, [0] * (d - 1))
    return tuple(sorted(out))


def _falling(x: Fraction, count: int) -> Fraction:
    """x (x-1) ... (x-count+1); empty product for count <= 0."""
    out = Fraction(1)
    for k in range(count):
        out *= x - k
    return out


@lru_cache(maxsize=None)
def h_coefficients(d: int, r: int, i: int, j: int, s: int) -> tuple[tuple[tuple[int, ...], Fraction], ...]:
    """(m, coefficient) pairs of H^s_ij."""
    tab = residue_table(d, r)
    x = Fraction(tab.R(i, 1) - 1, d)
    dl = tab.D(i, j)
    top = x + d - 1
    out = []
    for m in _weight_vectors(d, tab.R(i, j) + d * s):
        size = sum(m)
        count = d - 1 + dl - s + size
        c = _falling(top, count) / math.prod(math.factorial(e) for e in m)
        if c:
            out.append((m, c))
    return tuple(out)


def h_poly(d: int, r: int, i: int, j: int, s: int) -> SparseRatPoly:
    return SparseRatPoly(d - 1, dict(h_coefficients(d, r, i, j, s)))


def _h_value(d, r, i, j, s, point, zero):
    tot = zero
    for m, c in h_coefficients(d, r, i, j, s):
        term = c
        for x, e in zip(point, m):
            if e:
                term = x ** e * term
        tot = tot + term
    return tot


# -- assignments and f_n^t ----------------------------------------------------------

@lru_cache(maxsize=None)
def assignment_classes(d: int, r: int, n: int) -> tuple[int, tuple[tuple[tuple[int, ...], int, int], ...]]:
    """(min value, [(sigma, sign, s_0)]) over S_n for the cost r_(i,sigma(i))."""
    tab = residue_table(d, r)
    perms = []
    for sigma in itertools.permutations(range(1, n + 1)):
        cost = sum(tab.R(i, sigma[i - 1]) for i in range(1, n + 1))
        perms.append((sigma, cost))
    lo = min(c for _, c in perms)
    out = []
    for sigma, c in perms:
        if (c - lo) % d:
            raise AssertionError("assignment values not congruent mod d")
        out.append((sigma, permutation_sign([k - 1 for k in sigma]), (c - lo) // d))
    return lo, tuple(out)


def min_assignment(d: int, r: int, n: int) -> int:
    return assignment_classes(d, r, n)[0]


def _f_value(d: int, r: int, n: int, t: int, point, zero, one):
    """f_n^t evaluated at ``point`` (any ring with + and *)."""
    _, classes = assignment_classes(d, r, n)
    cache: dict = {}

    def h(i, j, s):
        key = (i, j, s)
        if key not in cache:
            cache[key] = _h_value(d, r, i, j, s, point, zero)
        return cache[key]

    total = zero
    for sigma, sign, s0 in classes:
        if s0 > t:
            continue
        budget = t - s0
        # coefficient of u^budget in prod_i h_{i,sigma(i)}(u)
        series = [one] + [zero] * budget
        for i in range(1, n + 1):
            j = sigma[i - 1]
            hs = [h(i, j, s) for s in range(budget + 1)]
            new = [zero] * (budget + 1)
            for a_, ca in enumerate(series):
                if _is_zero(ca):
                    continue
                for b in range(budget + 1 - a_):
                    if not _is_zero(hs[b]):
                        new[a_ + b] = new[a_ + b] + ca * hs[b]
            series = new
        term = series[budget]
        total = total + term if sign > 0 else total - term
    return total


def f_n_t(d: int, r: int, n: int, t: int) -> SparseRatPoly:
    """Symbolic f_n^t; intended for small d."""
    k = d - 1
    point = [SparseRatPoly.var(k, i) for i in range(1, d)]
    return _f_value(d, r, n, t, point, SparseRatPoly(k), SparseRatPoly.const(k, 1))


def denominator_report(d: int, r: int, n: int, t: int) -> dict:
    """Denominator of f_n^t against d^((d+1)n) n! and the looser d^(2dn) ((d-1)!)^n.

    The first bound fails for some (d, r, n) (d = 4, r = 3, n = 1 is the
    smallest), because the 1/m! factors of H^s_ij are not absorbed.
    """
    den = f_n_t(d, r, n, t).denominator()
    tight = d ** ((d + 1) * n) * math.factorial(n)
    loose = d ** (2 * d * n) * math.factorial(d - 1) ** n
    return {"denominator": den, "bound": tight, "within_bound": tight % den == 0,
            "within_loose_bound": loose % den == 0}


def _f_nonzero(d: int, r: int, n: int, t: int) -> bool:
    """Randomized identity test for f_n^t != 0 over Z/P; a nonzero value is a proof."""
    rng = random.Random(f"identity-test {d} {r} {n} {t}")
    zero, one = ModP(SZ_PRIME, 0), ModP(SZ_PRIME, 1)
    for _ in range(SZ_TRIALS):
        point = [ModP(SZ_PRIME, rng.randrange(1, SZ_PRIME)) for _ in range(d - 1)]
        if not _f_value(d, r, n, t, point, zero, one).is_zero():
            return True
    return False


@lru_cache(maxsize=None)
def t_n(d: int, r: int, n: int) -> int:
    """Least t with f_n^t != 0, searched up to n(d-1)."""
    if not 1 <= n <= d - 1:
        raise ValueError("need 1 <= n <= d-1")
    cap = n * (d - 1)
    for t in range(cap + 1):
        if _f_nonzero(d, r, n, t):
            return t
    raise Finding(f"f_{n}^t vanishes for all t <= {cap} at d={d}, r={r}")


def epsilon_n(d: int, r: int, n: int, p: int) -> Fraction:
    if p % d != r:
        raise ValueError(f"p={p} is not congruent to r={r} mod d={d}")
    return Fraction(min_assignment(d, r, n) + d * t_n(d, r, n), d * (p - 1))


# -- membership -----------------------------------------------------------------

def psi_index_set(d: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, d) for j in range(1, min(i + 1, d - 1) + 1)]


@dataclass
class Membership:
    in_X: bool
    in_Y: bool
    psi_zero: list[tuple[int, int]]
    phi_zero: list[int]

    @property
    def in_W(self) -> bool:
        return self.in_X and self.in_Y

    def __iter__(self):
        return iter((self.in_X, self.in_Y, self.in_W))

    def to_json(self) -> dict:
        return {
            "in_X": self.in_X,
            "in_Y": self.in_Y,
            "in_W": self.in_W,
            "vanishing_psi_factors": [list(ij) for ij in self.psi_zero],
            "vanishing_phi_factors": self.phi_zero,
        }


def membership(d: int, r: int, a_vec: Sequence, p: int | None = None, a: int = 1,
               unram_poly: Sequence[int] | None = None) -> Membership:
    """Decide membership of (a_1..a_(d-1)) in X_r, Y_r and W_r.

    Without ``p`` the entries are rationals.  With ``p`` they are residues
    in F_(p^a) (ints or coordinate tuples) and every factor is reduced mod p.
    """
    if len(a_vec) != d - 1:
        raise ValueError(f"expected {d - 1} coefficients a_1..a_{d - 1}, got {len(a_vec)}")
    residue_table(d, r)
    if p is None:
        point = [Fraction(x) for x in a_vec]
        zero, one = Fraction(0), Fraction(1)
    else:
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        F = GF(p, tuple(unram_poly) if unram_poly else find_irreducible(p, a))
        point = [FqElem(F, x if isinstance(x, (tuple, list)) else (x,)) for x in a_vec]
        zero, one = FqElem(F, ()), FqElem(F, (1,))
    psi_zero = [ij for ij in psi_index_set(d) if _is_zero(_h_value(d, r, *ij, 0, point, zero))]
    phi_zero = [n for n in range(1, d) if _is_zero(_f_value(d, r, n, t_n(d, r, n), point, zero, one))]
    return Membership(not psi_zero, not phi_zero, psi_zero, phi_zero)


# -- the polygon ------------------------------------------------------------------

@dataclass
class GnpReport:
    d: int
    r: int
    p: int
    min_assign: list[int]
    t: list[int]
    eps: list[Fraction]
    psi_factors: list[tuple[int, int]]
    phi_factors: list[tuple[int, int]]
    polygon: Polygon
    findings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "r": self.r,
            "p": self.p,
            "per_n": [
                {"n": n, "min_assignment": m, "t_n": t, "epsilon_n": frac_str(e)}
                for n, (m, t, e) in enumerate(zip(self.min_assign, self.t, self.eps), start=1)
            ],
            "psi_factors": [f"H^0_{i}{j}" for i, j in self.psi_factors],
            "phi_factors": [f"f_{n}^{t}" for n, t in self.phi_factors],
            "polygon": self.polygon.to_json(),
            "findings": self.findings,
        }


def gnp_points(d: int, p: int) -> list[tuple[int, Fraction]]:
    r = p % d
    return [(0, Fraction(0))] + [
        (n, Fraction(n * (n + 1), 2 * d) + epsilon_n(d, r, n, p)) for n in range(1, d)
    ]


def gnp_polygon(d: int, p: int) -> GnpReport:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if d % p == 0:
        raise ValueError(f"p={p} divides d={d}")
    r = p % d
    tab_ok = math.gcd(r, d) == 1 and r != 0
    if not tab_ok:
        raise ValueError(f"p mod d = {r} is not a unit residue")
    ms = [min_assignment(d, r, n) for n in range(1, d)]
    ts = [t_n(d, r, n) for n in range(1, d)]
    es = [epsilon_n(d, r, n, p) for n in range(1, d)]
    pts = gnp_points(d, p)
    poly = lower_hull(pts)
    findings = []
    verts = {x for x, _ in poly.vertices}
    missing = [n for n, _ in pts if n not in verts]
    if missing:
        findings.append(f"points {missing} lie on the hull but are not vertices")
    if not lies_above(poly, hodge_polygon(d)):
        findings.append("GNP dips below HP")
    if es[-1] != 0:
        findings.append(f"epsilon_{d - 1} = {es[-1]} is nonzero")
    return GnpReport(d, r, p, ms, ts, es, psi_index_set(d),
                     [(n, t) for n, t in zip(range(1, d), ts)], poly, findings)


def admissible_residues(d: int) -> list[int]:
    return [r for r in range(1, d) if math.gcd(r, d) == 1]
