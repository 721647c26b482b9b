"""Small prime-power finite fields over F_p.

Polynomials are plain lists of ints, lowest degree first.  Field elements
are tuples of coordinates in the power basis of the defining polynomial.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    k = 2
    while k * k <= n:
        if n % k == 0:
            out.append(k)
            while n % k == 0:
                n //= k
        k += 1
    if n > 1:
        out.append(n)
    return out


# -- polynomials over F_p ---------------------------------------------------

def poly_trim(f: list[int]) -> list[int]:
    f = list(f)
    while f and f[-1] == 0:
        f.pop()
    return f


def poly_mul(f: list[int], g: list[int], p: int) -> list[int]:
    if not f or not g:
        return []
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if a:
            for j, b in enumerate(g):
                out[i + j] += a * b
    return poly_trim([c % p for c in out])


def poly_divmod(f: list[int], g: list[int], p: int) -> tuple[list[int], list[int]]:
    g = poly_trim(g)
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    f = [c % p for c in f]
    inv_lead = pow(g[-1], -1, p)
    q = [0] * max(len(f) - len(g) + 1, 0)
    for k in range(len(f) - len(g), -1, -1):
        c = f[k + len(g) - 1] * inv_lead % p
        q[k] = c
        if c:
            for j, b in enumerate(g):
                f[k + j] = (f[k + j] - c * b) % p
    return poly_trim(q), poly_trim(f[: len(g) - 1])


def poly_mod(f: list[int], g: list[int], p: int) -> list[int]:
    return poly_divmod(f, g, p)[1]


def poly_gcd(f: list[int], g: list[int], p: int) -> list[int]:
    f, g = poly_trim([c % p for c in f]), poly_trim([c % p for c in g])
    while g:
        f, g = g, poly_mod(f, g, p)
    if f:
        inv = pow(f[-1], -1, p)
        f = [c * inv % p for c in f]
    return f


def poly_powmod(f: list[int], e: int, m: list[int], p: int) -> list[int]:
    result = [1]
    base = poly_mod(f, m, p)
    while e:
        if e & 1:
            result = poly_mod(poly_mul(result, base, p), m, p)
        base = poly_mod(poly_mul(base, base, p), m, p)
        e >>= 1
    return result


def is_irreducible(f: list[int], p: int) -> bool:
    """Rabin-style test: no common factor with x^(p^i) - x for i <= deg/2."""
    f = poly_trim([c % p for c in f])
    n = len(f) - 1
    if n < 1:
        return False
    if n == 1:
        return True
    x = [0, 1]
    xp = x
    for _ in range(n // 2):
        xp = poly_powmod(xp, p, f, p)
        diff = poly_trim([(a - b) % p for a, b in itertools.zip_longest(xp, x, fillvalue=0)])
        if len(poly_gcd(f, diff, p)) > 1:
            return False
    return True


@lru_cache(maxsize=None)
def find_irreducible(p: int, n: int) -> tuple[int, ...]:
    """First monic irreducible of degree n in a fixed enumeration order.

    Degree one always returns x, so the degree-one field uses 0 as its
    (trivial) generator.
    """
    if n == 1:
        return (0, 1)
    for code in range(1, p**n):
        low = [(code // p**k) % p for k in range(n)]
        f = low + [1]
        if f[0] == 0:
            continue
        if is_irreducible(f, p):
            return tuple(f)
    raise RuntimeError(f"no irreducible polynomial of degree {n} mod {p}")


class GF:
    """The field F_p[t]/(modulus).  Elements are coordinate tuples."""

    def __init__(self, p: int, modulus: tuple[int, ...] | list[int]):
        self.p = p
        self.modulus = tuple(int(c) % p for c in modulus)
        self.degree = len(self.modulus) - 1
        self.order = p**self.degree
        if self.modulus[-1] != 1:
            raise ValueError("modulus must be monic")
        if not is_irreducible(list(self.modulus), p):
            raise ValueError(f"{self.modulus} is reducible mod {p}")

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.degree}, modulus={list(self.modulus)})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GF) and (self.p, self.modulus) == (other.p, other.modulus)

    def __hash__(self) -> int:
        return hash((self.p, self.modulus))

    def elem(self, coords) -> tuple[int, ...]:
        if isinstance(coords, int):
            coords = [coords]
        coords = [int(c) % self.p for c in coords]
        coords = poly_mod(coords, list(self.modulus), self.p)
        return tuple(coords + [0] * (self.degree - len(coords)))

    @property
    def zero(self) -> tuple[int, ...]:
        return (0,) * self.degree

    @property
    def one(self) -> tuple[int, ...]:
        return self.elem(1)

    def add(self, x, y):
        return tuple((a + b) % self.p for a, b in zip(x, y))

    def sub(self, x, y):
        return tuple((a - b) % self.p for a, b in zip(x, y))

    def mul(self, x, y):
        return self.elem(poly_mul(list(x), list(y), self.p))

    def pow(self, x, e: int):
        if e < 0:
            return self.pow(self.inv(x), -e)
        r = poly_powmod(list(x), e, list(self.modulus), self.p)
        return self.elem(r)

    def inv(self, x):
        if not any(x):
            raise ZeroDivisionError("inverse of zero in finite field")
        return self.pow(x, self.order - 2)

    def from_code(self, code: int):
        return tuple((code // self.p**k) % self.p for k in range(self.degree))

    def to_code(self, x) -> int:
        return sum(c * self.p**k for k, c in enumerate(x))

    def elements(self):
        for code in range(self.order):
            yield self.from_code(code)

    def trace(self, x) -> int:
        """Absolute trace to F_p."""
        acc = self.zero
        y = x
        for _ in range(self.degree):
            acc = self.add(acc, y)
            y = self.pow(y, self.p)
        assert not any(acc[1:])
        return acc[0]

    def is_primitive(self, x) -> bool:
        n = self.order - 1
        if not any(x):
            return False
        return all(self.pow(x, n // q) != self.one for q in prime_factors(n)) if n > 1 else True

    @property
    def generator(self):
        """Smallest-code primitive element."""
        if not hasattr(self, "_gen"):
            for code in range(1, self.order):
                x = self.from_code(code)
                if self.is_primitive(x):
                    self._gen = x
                    break
        return self._gen

    def mul_matrix(self, x) -> np.ndarray:
        """Matrix of y -> x*y on coordinate row vectors (y @ M)."""
        rows = []
        for k in range(self.degree):
            basis = [0] * self.degree
            basis[k] = 1
            rows.append(self.mul(tuple(basis), x))
        return np.array(rows, dtype=np.int64)

    def roots_of(self, poly: list[int] | tuple[int, ...]):
        """Roots in this field of a polynomial with F_p coefficients (brute force)."""
        out = []
        for x in self.elements():
            acc = self.zero
            for c in reversed(poly):
                acc = self.add(self.mul(acc, x), self.elem(c))
            if not any(acc):
                out.append(x)
        return out
