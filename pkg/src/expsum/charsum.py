"""Exact exponential sums over finite fields and the resulting L-polynomial.

This is the ground-truth path: every S_l is a full enumeration of F_{q^l}
with a precomputed table of absolute traces of powers of a primitive
element, and the L-coefficients come out of Newton's identities in Z[zeta_p].
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np

from .errors import Finding, ResourceGuard
from .ffield import GF, find_irreducible, is_prime
from .polygon import INF, Polygon, hodge_polygon, lies_above, lower_hull

ENUM_GUARD = 2**26
_BLOCK = 4096


class CycInt:
    """Element of Z[zeta_p] in the basis 1, zeta, ..., zeta^(p-2)."""

    __slots__ = ("p", "coords")

    def __init__(self, p: int, coords: Sequence[int]):
        coords = [int(c) for c in coords]
        if len(coords) > p - 1:
            # fold zeta^(p-1) = -(1 + ... + zeta^(p-2)) and zeta^p = 1
            full = [0] * p
            for k, c in enumerate(coords):
                full[k % p] += c
            top = full[p - 1]
            coords = [c - top for c in full[: p - 1]]
        else:
            coords = coords + [0] * (p - 1 - len(coords))
        self.p = p
        self.coords = tuple(coords)

    @classmethod
    def zero(cls, p: int) -> "CycInt":
        return cls(p, [])

    @classmethod
    def one(cls, p: int) -> "CycInt":
        return cls(p, [1])

    @classmethod
    def zeta_power(cls, p: int, k: int) -> "CycInt":
        c = [0] * p
        c[k % p] = 1
        return cls(p, c)

    def __eq__(self, other) -> bool:
        return isinstance(other, CycInt) and self.p == other.p and self.coords == other.coords

    def __hash__(self) -> int:
        return hash((self.p, self.coords))

    def __repr__(self) -> str:
        return f"CycInt({self.p}, {list(self.coords)})"

    def __add__(self, other: "CycInt") -> "CycInt":
        return CycInt(self.p, [x + y for x, y in zip(self.coords, other.coords)])

    def __sub__(self, other: "CycInt") -> "CycInt":
        return CycInt(self.p, [x - y for x, y in zip(self.coords, other.coords)])

    def __neg__(self) -> "CycInt":
        return CycInt(self.p, [-x for x in self.coords])

    def __mul__(self, other) -> "CycInt":
        if isinstance(other, int):
            return CycInt(self.p, [x * other for x in self.coords])
        out = [0] * (2 * self.p)
        for i, x in enumerate(self.coords):
            if x:
                for j, y in enumerate(other.coords):
                    out[i + j] += x * y
        return CycInt(self.p, out)

    __rmul__ = __mul__

    def exact_div(self, n: int) -> "CycInt":
        if any(x % n for x in self.coords):
            raise ArithmeticError(f"{self} is not divisible by {n} in Z[zeta_{self.p}]")
        return CycInt(self.p, [x // n for x in self.coords])

    def is_zero(self) -> bool:
        return not any(self.coords)

    def pi_coords(self) -> list[int]:
        """Coordinates in the basis pi^i, pi = zeta - 1."""
        out = [0] * (self.p - 1)
        for k, c in enumerate(self.coords):
            if c:
                for i in range(k + 1):
                    out[i] += c * comb(k, i)
        return out

    def valuation(self):
        """Exact ord_p, an element of (1/(p-1))Z, or INF for zero."""
        p = self.p
        best = None
        for i, c in enumerate(self.pi_coords()):
            if c:
                v = 0
                while c % p == 0:
                    c //= p
                    v += 1
                cand = Fraction(v) + Fraction(i, p - 1)
                if best is None or cand < best:
                    best = cand
        return INF if best is None else best

    def galois(self, i: int) -> "CycInt":
        """Image under zeta -> zeta^i."""
        if i % self.p == 0:
            raise ValueError("not an automorphism")
        out = [0] * self.p
        for k, c in enumerate(self.coords):
            out[(k * i) % self.p] += c
        return CycInt(self.p, out)

    def to_json(self) -> dict:
        v = self.valuation()
        return {"zeta_coords": list(self.coords), "val": "inf" if v is INF else f"{v.numerator}/{v.denominator}"}


@dataclass(frozen=True)
class MonicPoly:
    """x^d + a_{d-1} x^{d-1} + ... + a_0 over F_q, coefficients lowest first.

    Each a_i is a coordinate tuple over F_p in the basis 1, y, ..., y^(a-1)
    of F_q = F_p[y]/(g).
    """

    p: int
    a: int
    coeffs: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        cs = tuple(tuple(int(c) % self.p for c in x) + (0,) * (self.a - len(x)) for x in self.coeffs)
        if any(len(x) != self.a for x in cs):
            raise ValueError("coefficient has too many coordinates")
        object.__setattr__(self, "coeffs", cs)

    @property
    def d(self) -> int:
        return len(self.coeffs)

    @classmethod
    def from_ints(cls, p: int, a: int, values: Sequence[int]) -> "MonicPoly":
        return cls(p, a, tuple((int(v),) for v in values))

    @classmethod
    def parse(cls, p: int, a: int, items: Sequence[str | int]) -> "MonicPoly":
        return cls(p, a, tuple(parse_residue(x, p, a) for x in items))

    def without_constant(self) -> "MonicPoly":
        return MonicPoly(self.p, self.a, ((0,) * self.a,) + self.coeffs[1:])

    def plus_constant(self, c: Sequence[int]) -> "MonicPoly":
        c = tuple(c) + (0,) * (self.a - len(c))
        a0 = tuple((x + y) % self.p for x, y in zip(self.coeffs[0], c))
        return MonicPoly(self.p, self.a, (a0,) + self.coeffs[1:])

    def __str__(self) -> str:
        terms = [f"x^{self.d}"]
        for i in range(self.d - 1, -1, -1):
            c = self.coeffs[i]
            if any(c):
                terms.append(f"({format_residue(c)})*x^{i}")
        return " + ".join(terms)


_TERM = re.compile(r"^([+-]?\d*)\*?(y(\^(\d+))?)?$")


def parse_residue(s: str | int, p: int, a: int) -> tuple[int, ...]:
    """Parse '3', '2+y', 'y^2+4y+1' into F_q coordinates."""
    if isinstance(s, int):
        return (s % p,) + (0,) * (a - 1)
    s = str(s).replace(" ", "")
    if not s:
        raise ValueError("empty coefficient")
    out = [0] * a
    for tok in re.findall(r"[+-]?[^+-]+", s):
        m = _TERM.match(tok)
        if not m:
            raise ValueError(f"cannot parse coefficient term {tok!r}")
        num, ypart, _, exp = m.groups()
        if num in ("", "+", "-"):
            if not ypart:
                raise ValueError(f"cannot parse coefficient term {tok!r}")
            num = num + "1"
        k = int(exp) if exp else (1 if ypart else 0)
        if k >= a:
            raise ValueError(f"power y^{k} out of range for a={a}")
        out[k] = (out[k] + int(num)) % p
    return tuple(out)


def format_residue(c: Sequence[int]) -> str:
    parts = []
    for k, x in enumerate(c):
        if x:
            parts.append(str(x) if k == 0 else f"{x}y" if k == 1 else f"{x}y^{k}")
    return "+".join(parts) if parts else "0"


class ExtField:
    """F_{q^l} with a fixed embedding of F_q and a table Tr(g^k) for a primitive g."""

    def __init__(self, p: int, a: int, ell: int, unram_poly: Sequence[int] | None = None):
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        n = a * ell
        self.p, self.a, self.ell, self.n = p, a, ell, n
        self.Q = p**n
        self.q = p**a
        if self.Q > ENUM_GUARD:
            raise ResourceGuard(f"enumerating F_{p}^{n} exceeds the 2^26 element guard")
        self.big = GF(p, find_irreducible(p, n))
        self.small = GF(p, tuple(unram_poly) if unram_poly is not None else find_irreducible(p, a))
        self.gen = self.big.generator
        self._build_embedding()
        self.trace_table = self._build_traces()

    def _build_embedding(self):
        big, p = self.big, self.p
        step = (self.Q - 1) // (self.q - 1)
        h = big.pow(self.gen, step)
        logs = {}
        x = big.one
        for m in range(self.q - 1):
            logs[x] = m * step
            x = big.mul(x, h)
        self._sub_logs = logs
        if self.a == 1:
            self.y_image = big.zero
            self.y_log = None
            return
        g = self.small.modulus
        # a root of g in the subfield, minimal exponent first
        for m in range(self.q - 1):
            r = big.pow(h, m)
            acc = big.zero
            for c in reversed(g):
                acc = big.add(big.mul(acc, r), big.elem(c))
            if not any(acc):
                self.y_image = r
                self.y_log = m * step
                return
        raise RuntimeError("unramified polynomial has no root in the extension")

    def _build_traces(self) -> np.ndarray:
        big, p, n = self.big, self.p, self.n
        basis_tr = []
        for k in range(n):
            e = [0] * n
            e[k] = 1
            basis_tr.append(big.trace(tuple(e)))
        trvec = np.array(basis_tr, dtype=np.int64)
        total = self.Q - 1
        B = min(_BLOCK, total)
        rows = []
        x = big.one
        for _ in range(B):
            rows.append(x)
            x = big.mul(x, self.gen)
        block = np.array(rows, dtype=np.int64)
        step = big.mul_matrix(x)
        out = np.empty(total, dtype=np.int64)
        pos = 0
        while pos < total:
            take = min(B, total - pos)
            out[pos:pos + take] = (block[:take] @ trvec) % p
            pos += take
            if pos < total:
                block = (block @ step) % p
        return out

    def embed(self, c: Sequence[int]) -> tuple[int, ...]:
        """Image in F_{q^l} of an F_q element given in y-coordinates."""
        big = self.big
        acc = big.zero
        pw = big.one
        for k, x in enumerate(c):
            if x:
                acc = big.add(acc, big.mul(big.elem(x), pw))
            if k < self.a - 1:
                pw = big.mul(pw, self.y_image)
        return acc

    def log(self, c: Sequence[int]) -> int | None:
        """Discrete log base gen of an embedded F_q element; None for zero."""
        x = self.embed(c)
        if not any(x):
            return None
        return self._sub_logs[x]

    def describe(self) -> dict:
        return {
            "field_modulus": list(self.big.modulus),
            "generator_code": self.big.to_code(self.gen),
            "unram_poly": list(self.small.modulus),
            "y_image_code": self.big.to_code(self.y_image),
            "zeta_embedding": "zeta_p -> 1 + pi, pi root of Phi_p(x+1)",
        }


@lru_cache(maxsize=32)
def ext_field(p: int, a: int, ell: int, unram_poly: tuple[int, ...] | None = None) -> ExtField:
    return ExtField(p, a, ell, unram_poly)


def trace_values(f: MonicPoly, field: ExtField) -> np.ndarray:
    """Tr(f(x)) for x = g^k, k = 0..Q-2, as an int array."""
    Q1 = field.Q - 1
    k = np.arange(Q1, dtype=np.int64)
    acc = np.zeros(Q1, dtype=np.int64)
    T = field.trace_table
    one = (1,) + (0,) * (field.a - 1)
    for i in range(1, f.d + 1):
        c = f.coeffs[i] if i < f.d else one
        L = field.log(c)
        if L is None:
            continue
        idx = (L + (i % Q1) * k) % Q1 if Q1 > 1 else np.zeros(Q1, dtype=np.int64)
        acc += T[idx]
    L0 = field.log(f.coeffs[0])
    if L0 is not None:
        acc += T[L0]
    return acc % field.p


def char_sum(f: MonicPoly, field: ExtField) -> CycInt:
    """sum over x in F_{q^l} of zeta_p^Tr(f(x))."""
    p = f.p
    if f.p != field.p or f.a != field.a:
        raise ValueError("polynomial and field disagree on p or a")
    if f.d % p == 0:
        raise ValueError(f"p={p} divides d={f.d}")
    counts = np.bincount(trace_values(f, field), minlength=p).astype(object)
    L0 = field.log(f.coeffs[0])
    t0 = 0 if L0 is None else int(field.trace_table[L0])
    counts[t0] += 1
    return CycInt(p, [int(c) for c in counts])


def l_polynomial(f: MonicPoly, unram_poly: Sequence[int] | None = None) -> list[CycInt]:
    """b_0..b_{d-1} of exp(sum_l S_l T^l / l), with integrality asserted."""
    p, a, d = f.p, f.a, f.d
    if d % p == 0:
        raise ValueError(f"p={p} divides d={d}")
    if p ** (a * (d - 1)) > ENUM_GUARD:
        raise ResourceGuard(f"q^(d-1) = {p}^{a * (d - 1)} exceeds the enumeration guard")
    key = tuple(unram_poly) if unram_poly is not None else None
    S = [None] + [char_sum(f, ext_field(p, a, ell, key)) for ell in range(1, d)]
    b = [CycInt.one(p)]
    for n in range(1, d):
        acc = CycInt.zero(p)
        for k in range(1, n + 1):
            acc = acc + S[k] * b[n - k]
        b.append(acc.exact_div(n))
    if b[-1].is_zero():
        raise Finding(f"L-polynomial of {f} has degree below d-1")
    return b


def polygon_of(coeffs: Sequence[CycInt], a: int) -> Polygon:
    pts = []
    for n, c in enumerate(coeffs):
        v = c.valuation()
        pts.append((n, INF if v is INF else v / a))
    return lower_hull(pts)


def np_oracle(f: MonicPoly, unram_poly: Sequence[int] | None = None) -> Polygon:
    """q-adic Newton polygon of the L-polynomial, checked against the Hodge bound."""
    P = polygon_of(l_polynomial(f, unram_poly), f.a)
    if f.d >= 3:
        cmp = lies_above(P, hodge_polygon(f.d))
        if not cmp:
            raise Finding(f"NP of {f} dips below the Hodge polygon at {cmp.witness}")
    return P


def curve_genus(d: int, p: int) -> int:
    """Genus of y^p - y = f(x) with deg f = d prime to p."""
    return (d - 1) * (p - 1) // 2
