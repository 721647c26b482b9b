"""Truncated arithmetic in O = Z_q[pi], pi = zeta_p - 1, q = p^a.

Elements are stored as ``numerator / p^shift`` where the numerator is a
vector of (p-1)*a integers modulo p^N: the coefficient of pi^i y^k sits at
index ``i*a + k``, y being a root of the unramified defining polynomial.
Every element carries an absolute precision ``prec`` in units of ord(pi),
so valuations are reported in p-adic units as ``v / (p-1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

import gmpy2

from . import linalg
from .errors import PrecisionError
from .ffield import GF, find_irreducible, is_prime
from .polygon import INF, Polygon, lower_hull


@dataclass(frozen=True)
class AtLeast:
    """Valuation marker: only a lower bound (in p-adic units) is certified."""

    floor: Fraction

    def __str__(self) -> str:
        return f">= {self.floor}"


def vp(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("v_p(0) is infinite")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_fraction(x: Fraction, p: int) -> int | None:
    x = Fraction(x)
    if x == 0:
        return None
    return vp(x.numerator, p) - vp(x.denominator, p)


class Tower:
    """Arithmetic context for Z_q[pi] at storage precision p^N."""

    def __init__(self, p: int, a: int, N: int, unram_poly: Sequence[int] | None = None):
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        if a < 1 or N < 1:
            raise ValueError("need a >= 1 and N >= 1")
        self.p, self.a, self.N = p, a, N
        self.e = p - 1
        self.q = p**a
        self.mod = p**N
        self.n = self.e * a
        g = tuple(int(c) for c in (unram_poly if unram_poly is not None else find_irreducible(p, a)))
        if len(g) != a + 1 or g[-1] != 1:
            raise ValueError("unramified polynomial must be monic of degree a")
        self.unram_poly = g
        self.residue_field = GF(p, g)
        # Phi_p(x+1) = sum_k binom(p, k+1) x^k, monic of degree p-1
        self.eisenstein_poly = tuple(comb(p, k + 1) for k in range(p))
        self._g_low = [c % self.mod for c in g[:a]]
        self._eis = list(self.eisenstein_poly[: self.e])
        bound = self.n * (self.mod - 1) ** 2
        self._sb = (bound.bit_length() + 8) // 8
        self._A = 2 * a - 1
        self._zero_gap = bytes(self._sb * (a - 1))
        # coordinates of p/pi and pi^(p-1)/p, both exact
        p_over_pi = [0] * self.e
        p_over_pi[self.e - 1] = -1
        for k in range(1, self.e):
            p_over_pi[k - 1] -= self._eis[k]
        self._p_over_pi = p_over_pi
        self._pi_e_over_p = [-(self._eis[k] // p) for k in range(self.e)]
        self._tau_pows = self._compute_tau()
        self.tau_image = tuple(self._tau_pows[1 % a][1] if a > 1 else (0,))
        self.gamma = solve_gamma(self)

    def __repr__(self) -> str:
        return f"Tower(p={self.p}, a={self.a}, N={self.N}, unram_poly={list(self.unram_poly)})"

    def __reduce__(self):
        return (make_tower, (self.p, self.a, self.N, self.unram_poly))

    @property
    def cap(self) -> int:
        return self.N * self.e

    # -- Z_q helpers on length-a vectors ---------------------------------------

    def zq_mul(self, x, y) -> list[int]:
        a = self.a
        out = [0] * (2 * a - 1)
        for i, u in enumerate(x):
            if u:
                for j, v in enumerate(y):
                    out[i + j] += u * v
        g = self._g_low
        for t in range(2 * a - 2, a - 1, -1):
            h = out[t]
            if h:
                for j in range(a):
                    out[t - a + j] -= h * g[j]
        return [c % self.mod for c in out[:a]]

    def zq_pow(self, x, k: int) -> list[int]:
        result = [1] + [0] * (self.a - 1)
        base = list(x)
        while k:
            if k & 1:
                result = self.zq_mul(result, base)
            base = self.zq_mul(base, base)
            k >>= 1
        return result

    def zq_inv(self, x) -> list[int]:
        F = self.residue_field
        r = F.inv(F.elem(list(x)))
        y = list(r)
        two = [2] + [0] * (self.a - 1)
        for _ in range(self.N.bit_length() + 2):
            t = self.zq_mul(x, y)
            y = self.zq_mul(y, [(u - v) % self.mod for u, v in zip(two, t)])
        return y

    def _zq_eval(self, poly, r) -> list[int]:
        acc = [0] * self.a
        for c in reversed(poly):
            acc = self.zq_mul(acc, r)
            acc[0] = (acc[0] + c) % self.mod
        return acc

    def _compute_tau(self) -> list[list[list[int]]]:
        """Matrices of tau^j, j < a: row k is tau^j(y^k)."""
        a, p = self.a, self.p
        if a == 1:
            return [[[1]]]
        g = list(self.unram_poly)
        dg = [k * g[k] for k in range(1, len(g))]
        y = [0, 1] + [0] * (a - 2)
        r = self.zq_pow(y, p)
        for _ in range(2 * self.N + 8):
            gr = self._zq_eval(g, r)
            if not any(gr):
                break
            step = self.zq_mul(gr, self.zq_inv(self._zq_eval(dg, r)))
            r = [(u - v) % self.mod for u, v in zip(r, step)]
        else:
            raise RuntimeError("Frobenius lift did not converge")
        mats = []
        img_y = y
        for j in range(a):
            rows = [[1] + [0] * (a - 1)]
            for _ in range(1, a):
                rows.append(self.zq_mul(rows[-1], img_y))
            mats.append(rows)
            img_y = self._tau_on_vec(r, img_y)
        return mats

    def _tau_on_vec(self, tau_y, v) -> list[int]:
        """Apply tau (given tau(y)) to a vector of Z_q coordinates."""
        acc = [0] * self.a
        pw = [1] + [0] * (self.a - 1)
        for k, c in enumerate(v):
            if c:
                acc = [(s + c * t) % self.mod for s, t in zip(acc, pw)]
            if k < self.a - 1:
                pw = self.zq_mul(pw, tau_y)
        return acc

    # -- element construction -----------------------------------------------

    def _make(self, c: list[int], s: int, prec: int) -> "PadicElem":
        cap = (self.N - s) * self.e
        if prec > cap:
            prec = cap
        if s > 0:
            p = self.p
            while s > 0 and all(x % p == 0 for x in c):
                c = [x // p for x in c]
                s -= 1
        return PadicElem(self, c, s, prec)

    def zero(self) -> "PadicElem":
        return PadicElem(self, [0] * self.n, 0, self.cap)

    def one(self) -> "PadicElem":
        return self.from_int(1)

    def from_int(self, k: int) -> "PadicElem":
        c = [0] * self.n
        c[0] = k % self.mod
        return PadicElem(self, c, 0, self.cap)

    def from_fraction(self, x) -> "PadicElem":
        return self.one() * Fraction(x)

    def from_zq(self, v: Sequence[int]) -> "PadicElem":
        c = [0] * self.n
        for k, x in enumerate(v):
            c[k] = int(x) % self.mod
        return PadicElem(self, c, 0, self.cap)

    def from_pi_coords(self, coords: Sequence[int]) -> "PadicElem":
        """sum_i coords[i] pi^i with integer coefficients, any length."""
        c = [0] * self.n
        for i, v in enumerate(coords[: self.e]):
            c[i * self.a] = int(v) % self.mod
        x = PadicElem(self, c, 0, self.cap)
        if len(coords) > self.e:
            pie = self.pi() ** self.e
            tail = self.from_pi_coords(coords[self.e:])
            x = x + pie * tail
        return x

    def from_cyclotomic(self, coords: Sequence[int]) -> "PadicElem":
        """Image of sum_k coords[k] zeta^k under zeta -> 1 + pi (k < p-1)."""
        out = [0] * self.e
        for k, v in enumerate(coords):
            for i in range(k + 1):
                out[i] += v * comb(k, i)
        return self.from_pi_coords(out)

    def pi(self) -> "PadicElem":
        c = [0] * self.n
        if self.e > 1:
            c[self.a] = 1
            return PadicElem(self, c, 0, self.cap)
        # p = 2: pi = -2 lives in Z_2
        c[0] = (-2) % self.mod
        return PadicElem(self, c, 0, self.cap)

    def y(self) -> "PadicElem":
        c = [0] * self.n
        if self.a > 1:
            c[1] = 1
        else:
            c[0] = 0
        return PadicElem(self, c, 0, self.cap)

    # -- multiplication kernel ----------------------------------------------

    def _pack(self, c: list[int]) -> int:
        sb = self._sb
        if self.a == 1:
            return int.from_bytes(b"".join(x.to_bytes(sb, "little") for x in c), "little")
        a = self.a
        parts = []
        gap = self._zero_gap
        for i in range(self.e):
            for k in range(a):
                parts.append(c[i * a + k].to_bytes(sb, "little"))
            parts.append(gap)
        return int.from_bytes(b"".join(parts), "little")

    def _mul(self, x: list[int], y: list[int]) -> list[int]:
        e, sb, A = self.e, self._sb, self._A
        X = self._pack(x)
        Y = X if y is x else self._pack(y)
        slots = (2 * e - 1) * A
        buf = (X * Y).to_bytes(slots * sb, "little")
        return self._reduce_raw([int.from_bytes(buf[t * sb:(t + 1) * sb], "little") for t in range(slots)])

    def _reduce_raw(self, arr: list[int]) -> list[int]:
        """Reduce an unreduced product laid out as (2e-1) pi-levels of A slots."""
        a, e, A = self.a, self.e, self._A
        if a > 1:
            g = self._g_low
            R = []
            for i in range(2 * e - 1):
                blk = arr[i * A:(i + 1) * A]
                for t in range(A - 1, a - 1, -1):
                    h = blk[t]
                    if h:
                        for j in range(a):
                            blk[t - a + j] -= h * g[j]
                R.extend(blk[:a])
        else:
            R = list(arr)
        eis = self._eis
        for i in range(2 * e - 2, e - 1, -1):
            base = i * a
            for k in range(a):
                h = R[base + k]
                if h:
                    off = (i - e) * a + k
                    for t in range(e):
                        R[off + t * a] -= h * eis[t]
        m = self.mod
        return [v % m for v in R[: self.n]]


_TOWERS: dict = {}


def make_tower(p: int, a: int, N: int, unram_poly: Sequence[int] | None = None) -> Tower:
    key = (p, a, N, tuple(unram_poly) if unram_poly is not None else None)
    t = _TOWERS.get(key)
    if t is None:
        t = Tower(p, a, N, unram_poly)
        _TOWERS[key] = t
    return t


class PadicElem:
    """An element of Z_q[pi][1/p] known modulo pi^prec."""

    __slots__ = ("T", "c", "s", "prec", "_nv")

    def __init__(self, T: Tower, c: list[int], s: int, prec: int):
        self.T = T
        self.c = c
        self.s = s
        self.prec = prec
        self._nv = -1

    # -- valuations ----------------------------------------------------------

    def _numval(self) -> int | None:
        """ord_pi of the stored numerator, None if it is zero."""
        if self._nv != -1:
            return self._nv
        p, a, e, c = self.T.p, self.T.a, self.T.e, self.c
        best = None
        for i in range(e):
            if best is not None and best <= i:
                break
            vmin = None
            for k in range(a):
                x = c[i * a + k]
                if x:
                    v = 0
                    while x % p == 0:
                        x //= p
                        v += 1
                    if vmin is None or v < vmin:
                        vmin = v
                        if v == 0:
                            break
            if vmin is not None:
                cand = e * vmin + i
                if best is None or cand < best:
                    best = cand
        self._nv = best
        return best

    def val_units(self) -> int | None:
        """ord_pi of the stored value if certified, else None."""
        nv = self._numval()
        if nv is None:
            return None
        v = nv - self.s * self.T.e
        return v if v < self.prec else None

    @property
    def vlb(self) -> int:
        """Certified lower bound on ord_pi."""
        nv = self._numval()
        if nv is None:
            return self.prec
        return min(nv - self.s * self.T.e, self.prec)

    def valuation(self) -> Fraction | AtLeast:
        v = self.val_units()
        if v is None:
            return AtLeast(Fraction(self.prec, self.T.e))
        return Fraction(v, self.T.e)

    def is_zero(self) -> bool:
        """True if no nonzero digit is certified."""
        return self.val_units() is None

    def is_unit(self) -> bool:
        return self.val_units() == 0

    # -- arithmetic ------------------------------------------------------------

    def _coerce(self, other) -> "PadicElem":
        if isinstance(other, PadicElem):
            if other.T is not self.T:
                raise ValueError("elements from different towers")
            return other
        if isinstance(other, int):
            return self.T.from_int(other)
        if isinstance(other, Fraction):
            return self.T.from_fraction(other)
        return NotImplemented

    def _aligned(self, other: "PadicElem"):
        s = max(self.s, other.s)
        x, y = self.c, other.c
        m = self.T.mod
        if self.s < s:
            f = self.T.p ** (s - self.s)
            x = [v * f % m for v in x]
        if other.s < s:
            f = self.T.p ** (s - other.s)
            y = [v * f % m for v in y]
        return x, y, s

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.s == other.s:
            x, y, s = self.c, other.c, self.s
        else:
            x, y, s = self._aligned(other)
        m = self.T.mod
        return self.T._make([(u + v) % m for u, v in zip(x, y)], s, min(self.prec, other.prec))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.s == other.s:
            x, y, s = self.c, other.c, self.s
        else:
            x, y, s = self._aligned(other)
        m = self.T.mod
        return self.T._make([(u - v) % m for u, v in zip(x, y)], s, min(self.prec, other.prec))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        m = self.T.mod
        return PadicElem(self.T, [(-v) % m for v in self.c], self.s, self.prec)

    def _scale_int(self, k: int) -> "PadicElem":
        T = self.T
        if k == 0:
            return T.zero()
        v = vp(k, T.p)
        m = T.mod
        return T._make([x * k % m for x in self.c], self.s, self.prec + v * T.e)

    def __mul__(self, other):
        T = self.T
        if isinstance(other, int):
            return self._scale_int(other)
        if isinstance(other, Fraction):
            if other.denominator == 1:
                return self._scale_int(other.numerator)
            den = other.denominator
            v = vp(den, T.p)
            unit = den // T.p**v
            x = self._scale_int(other.numerator)
            if unit != 1:
                inv = pow(unit, -1, T.mod)
                x = PadicElem(T, [c * inv % T.mod for c in x.c], x.s, x.prec)
            if v:
                x = T._make(x.c, x.s + v, x.prec - v * T.e)
            return x
        if not isinstance(other, PadicElem):
            return NotImplemented
        if other.T is not T:
            raise ValueError("elements from different towers")
        prec = min(self.prec + other.vlb, other.prec + self.vlb)
        c = T._mul(self.c, other.c)
        return T._make(c, self.s + other.s, prec)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = self.T.one()
        base = self
        first = True
        while k:
            if k & 1:
                result = base if first else result * base
                first = False
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, int):
            return self * Fraction(1, other)
        if isinstance(other, Fraction):
            return self * (1 / other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def div_pi(self, k: int = 1) -> "PadicElem":
        """self / pi^k, losing k units of absolute precision only."""
        x = self
        T = self.T
        for _ in range(k):
            x = x._div_pi_once()
        return x

    def _div_pi_once(self) -> "PadicElem":
        T = self.T
        a, e, m, p = T.a, T.e, T.mod, T.p
        c = self.c
        head = c[:a]
        if all(v % p == 0 for v in head):
            out = c[a:] + [0] * a
            for k in range(a):
                h = head[k] // p
                if h:
                    for t, w in enumerate(T._p_over_pi):
                        if w:
                            out[t * a + k] = (out[t * a + k] + h * w) % m
            return PadicElem(T, out, self.s, self.prec - 1)
        # not divisible on the numerator: multiply by p/pi and raise the shift
        c = T._mul(self.c, T._p_over_pi_elem().c)
        return T._make(c, self.s + 1, self.prec - 1)

    def inverse(self) -> "PadicElem":
        v = self.val_units()
        if v is None:
            raise PrecisionError("inverse of an element with no certified digit")
        if v == 0 and self.s == 0:
            return self._unit_inverse()
        T = self.T
        k, r = divmod(v, T.e)
        # scale to an exact power of p so the shift never exceeds ceil(v/e)
        if r:
            lift = T.pi() ** (T.e - r)
            u = (self * lift) * _p_power(T.p, -(k + 1))
            return (u._unit_inverse() * lift) * _p_power(T.p, -(k + 1))
        u = self * _p_power(T.p, -k)
        return u._unit_inverse() * _p_power(T.p, -k)

    def _unit_inverse(self) -> "PadicElem":
        T = self.T
        if self.s:
            # a unit never needs a shift once normalized
            raise PrecisionError("unit with a p-power denominator")
        y = T.from_zq(T.zq_inv(self.c[: T.a]))
        target = self.prec
        one = T.one()
        for _ in range(64):
            err = one - self * y
            ev = err.vlb
            if ev >= target:
                break
            y = y + y * err
        else:
            raise RuntimeError("unit inverse did not converge")
        y.prec = min(y.prec, target)
        return y

    def tau(self, k: int = 1) -> "PadicElem":
        T = self.T
        j = k % T.a
        if j == 0:
            return self
        M = T._tau_pows[j]
        a, m = T.a, T.mod
        out = [0] * T.n
        c = self.c
        for i in range(T.e):
            base = i * a
            for kk in range(a):
                x = c[base + kk]
                if x:
                    row = M[kk]
                    for t in range(a):
                        out[base + t] += x * row[t]
        return PadicElem(T, [v % m for v in out], self.s, self.prec)

    def with_prec(self, prec: int) -> "PadicElem":
        if prec >= self.prec:
            return self
        return PadicElem(self.T, self.c, self.s, prec)

    def residue(self) -> tuple[int, ...]:
        """Image in the residue field F_q."""
        if self.vlb < 0 or self.s:
            if self.vlb >= 0:
                x = self.T._make(self.c, self.s, self.prec)
                if x.s == 0:
                    return x.residue()
            raise PrecisionError("residue of a non-integral or uncertified element")
        if self.prec < 1:
            raise PrecisionError("residue not certified")
        return tuple(v % self.T.p for v in self.c[: self.T.a])

    def agrees(self, other, floor: int | None = None) -> bool:
        """Equality modulo pi^floor (default: the joint precision)."""
        d = self - other
        if floor is None:
            floor = d.prec
        elif d.prec < floor:
            raise PrecisionError(f"only {d.prec} digits known, {floor} requested")
        return d.vlb >= floor

    def in_base(self) -> bool:
        """Whether the y-components vanish to precision (element of Z_p[pi])."""
        T = self.T
        if T.a == 1:
            return True
        for i in range(T.e):
            for k in range(1, T.a):
                x = self.c[i * T.a + k]
                if x and T.e * (vp(x, T.p) - self.s) + i < self.prec:
                    return False
        return True

    def pi_coords(self) -> list[Fraction]:
        """Rational pi-coordinates, valid for elements of Z_p[pi]."""
        T = self.T
        d = T.p**self.s
        return [Fraction(self.c[i * T.a], d) for i in range(T.e)]

    def to_json(self) -> dict:
        T = self.T
        v = self.valuation()
        return {
            "coords": [self.c[i * T.a:(i + 1) * T.a] for i in range(T.e)],
            "shift": self.s,
            "prec": f"{self.prec}/{T.e}",
            "val": str(v) if isinstance(v, Fraction) else f">={v.floor}",
        }

    def __repr__(self) -> str:
        return f"PadicElem(val={self.valuation()}, prec={Fraction(self.prec, self.T.e)})"


def _p_power(p: int, k: int):
    """p^k as an int or Fraction scalar."""
    return p**k if k >= 0 else Fraction(1, p ** (-k))


def _p_over_pi_elem(self: Tower) -> PadicElem:
    c = [0] * self.n
    for t, w in enumerate(self._p_over_pi):
        c[t * self.a] = w % self.mod
    return PadicElem(self, c, 0, self.cap)


Tower._p_over_pi_elem = _p_over_pi_elem


def valuation(x: PadicElem) -> Fraction | AtLeast:
    return x.valuation()


def frobenius_tau(tower: Tower, x: PadicElem, k: int) -> PadicElem:
    if x.T is not tower:
        raise ValueError("element from a different tower")
    return x.tau(k)


def teichmuller(tower: Tower, residue) -> PadicElem:
    """The root-of-unity lift of a residue-field element (or zero)."""
    F = tower.residue_field
    r = F.elem(list(residue) if not isinstance(residue, int) else residue)
    if not any(r):
        return tower.zero()
    x = list(r)
    for _ in range(tower.N + 2):
        nxt = tower.zq_pow(x, tower.q)
        if nxt == x:
            break
        x = nxt
    else:
        raise RuntimeError("Teichmuller iteration did not stabilize")
    return tower.from_zq(x)


def gamma_truncation(p: int, N: int) -> int:
    """Minimal J with p^(J+1)/(p-1) - (J+1) > N."""
    J = 0
    while Fraction(p ** (J + 1), p - 1) - (J + 1) <= N:
        J += 1
    return J


def _log_terms(x: PadicElem, J: int) -> list[PadicElem]:
    """[x^(p^j)/p^j for j = 0..J] for x of valuation 1/(p-1), computed without
    ever dividing a truncated numerator by a power of p.
    """
    T = x.T
    p = T.p
    terms = [x]
    if J == 0:
        return terms
    u = x.div_pi()
    w = PadicElem(T, [0] * T.n, 0, T.cap)
    for t, c in enumerate(T._pi_e_over_p):
        w.c[t * T.a] = c % T.mod
    z = x * (u ** (p - 1)) * w
    terms.append(z)
    for j in range(1, J):
        z = (z**p) * (p ** (j * (p - 1) - 1))
        terms.append(z)
    return terms


def solve_gamma(tower: Tower) -> PadicElem:
    """Root of sum_j x^(p^j)/p^j with x = pi mod pi^2, by Newton's method."""
    T = tower
    if T.p == 2:
        raise ValueError("p = 2 is not supported")
    J = gamma_truncation(T.p, T.N)
    x = T.pi()
    for _ in range(64):
        terms = _log_terms(x, J)
        h = terms[0]
        for t in terms[1:]:
            h = h + t
        if h.val_units() is None:
            x.prec = min(T.cap, h.prec)
            return x
        dh = T.one()
        for j in range(1, J + 1):
            dh = dh + x ** (T.p**j - 1)
        x = x - h * dh.inverse()
        x = PadicElem(T, x.c, x.s, T.cap)
    raise RuntimeError("gamma iteration did not converge")


def artin_hasse_rationals(p: int, m_max: int) -> list[Fraction]:
    """Coefficients e_m of exp(sum_j x^(p^j)/p^j), asserting p-integrality."""
    e = [Fraction(1)]
    powers = []
    k = 1
    while k <= m_max:
        powers.append(k)
        k *= p
    for m in range(1, m_max + 1):
        s = sum((e[m - k] for k in powers if k <= m), Fraction(0))
        val = s / m
        if val.denominator % p == 0:
            raise ArithmeticError(f"Artin-Hasse coefficient e_{m} is not p-integral")
        e.append(val)
    return e


# -- matrices and polynomials ----------------------------------------------

class PadicPoly:
    """Polynomial in T with PadicElem coefficients, constant term first."""

    def __init__(self, coeffs: Sequence[PadicElem]):
        self.coeffs = list(coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, i):
        return self.coeffs[i]

    def __iter__(self):
        return iter(self.coeffs)

    def valuations(self) -> list[Fraction | AtLeast]:
        return [c.valuation() for c in self.coeffs]

    def newton_polygon(self, scale: int = 1) -> Polygon:
        return certified_polygon(self.valuations(), scale)

    def to_json(self) -> list:
        return [c.to_json() for c in self.coeffs]


def certified_polygon(vals: Sequence[Fraction | AtLeast], scale: int = 1) -> Polygon:
    """Newton polygon from coefficient valuations divided by ``scale``.

    An uncertified coefficient is harmless only if its floor already lies on
    or above the hull of the certified ones.
    """
    if isinstance(vals[-1], AtLeast):
        raise PrecisionError("leading coefficient valuation not certified")
    pts = [(n, INF if isinstance(v, AtLeast) else Fraction(v) / scale) for n, v in enumerate(vals)]
    poly = lower_hull(pts)
    for n, v in enumerate(vals):
        if isinstance(v, AtLeast) and v.floor / scale < poly.ordinate(n):
            raise PrecisionError(f"coefficient {n} only known to have valuation {v}")
    return poly


class PadicMatrix:
    """Dense matrix of PadicElem over one tower."""

    def __init__(self, tower: Tower, rows):
        self.T = tower
        rows = [[x if isinstance(x, PadicElem) else _lift(tower, x) for x in row] for row in rows]
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged matrix")
        for row in rows:
            for x in row:
                if x.T is not tower:
                    raise ValueError("entry from a different tower")
        self.rows = rows

    @classmethod
    def identity(cls, tower: Tower, m: int) -> "PadicMatrix":
        return cls(tower, [[tower.one() if i == j else tower.zero() for j in range(m)] for i in range(m)])

    @classmethod
    def zeros(cls, tower: Tower, n: int, m: int | None = None) -> "PadicMatrix":
        m = n if m is None else m
        return cls(tower, [[tower.zero() for _ in range(m)] for _ in range(n)])

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), (len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other: "PadicMatrix") -> "PadicMatrix":
        n, k = self.shape
        k2, m = other.shape
        if k != k2:
            raise ValueError("shape mismatch")
        zero = self.T.zero()
        out = []
        for i in range(n):
            row = []
            for j in range(m):
                s = zero
                for t in range(k):
                    s = s + self.rows[i][t] * other.rows[t][j]
                row.append(s)
            out.append(row)
        return PadicMatrix(self.T, out)

    def __add__(self, other: "PadicMatrix") -> "PadicMatrix":
        return PadicMatrix(self.T, [[x + y for x, y in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: "PadicMatrix") -> "PadicMatrix":
        return PadicMatrix(self.T, [[x - y for x, y in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def scale(self, c) -> "PadicMatrix":
        return PadicMatrix(self.T, [[x * c for x in r] for r in self.rows])

    def tau(self, k: int = 1) -> "PadicMatrix":
        return PadicMatrix(self.T, [[x.tau(k) for x in r] for r in self.rows])

    def leading(self, n: int) -> "PadicMatrix":
        return PadicMatrix(self.T, [r[:n] for r in self.rows[:n]])

    def transpose(self) -> "PadicMatrix":
        n, m = self.shape
        return PadicMatrix(self.T, [[self.rows[i][j] for i in range(n)] for j in range(m)])

    def det(self) -> PadicElem:
        return linalg.det(self.rows, self.T.one())

    def adjugate(self) -> "PadicMatrix":
        return PadicMatrix(self.T, linalg.adjugate(self.rows, self.T.one()))

    def inverse(self) -> "PadicMatrix":
        dinv = self.det().inverse()
        return self.adjugate().scale(dinv)

    def char_poly(self) -> PadicPoly:
        return char_poly(self)

    def valuations(self) -> list[list[Fraction | AtLeast]]:
        return [[x.valuation() for x in r] for r in self.rows]

    def to_json(self) -> list:
        return [[x.to_json() for x in r] for r in self.rows]


def _lift(tower: Tower, x) -> PadicElem:
    if isinstance(x, int):
        return tower.from_int(x)
    if isinstance(x, Fraction):
        return tower.from_fraction(x)
    raise TypeError(f"cannot lift {type(x).__name__} into the tower")


def char_poly(M: PadicMatrix) -> PadicPoly:
    """Coefficients of det(I - T M), via the division-free Berkowitz scheme."""
    n, m = M.shape
    if n != m:
        raise ValueError("char_poly needs a square matrix")
    if n > 64:
        raise ValueError("matrix too large")
    return PadicPoly(linalg.charpoly(M.rows, M.T.one()))


def _series_numerators(T: Tower, S: Sequence[PadicElem]) -> tuple[list[list[int]], int]:
    s = max(x.s for x in S)
    out = []
    for x in S:
        if x.s == s:
            out.append(x.c)
        else:
            f = T.p ** (s - x.s)
            out.append([v * f % T.mod for v in x.c])
    return out, s


def _pack_series(T: Tower, nums: list[list[int]], sb: int) -> int:
    a, e, A = T.a, T.e, T._A
    gap = bytes(sb * (a - 1))
    tail = bytes(sb * (e - 1) * A)
    parts = []
    for c in nums:
        for i in range(e):
            for k in range(a):
                parts.append(c[i * a + k].to_bytes(sb, "little"))
            if a > 1:
                parts.append(gap)
        parts.append(tail)
    return int.from_bytes(b"".join(parts), "little")


def series_mul(A: Sequence[PadicElem], B: Sequence[PadicElem], L: int) -> list[PadicElem]:
    """Coefficients 0..L of the product of two truncated power series.

    Both series are packed into single big integers (series degree outside,
    pi and y degrees inside) and multiplied once.
    """
    T = A[0].T
    A = list(A[: L + 1])
    B = list(B[: L + 1])
    na, sa = _series_numerators(T, A)
    nb, sb_ = _series_numerators(T, B)
    terms = min(len(A), len(B))
    bound = terms * T.n * (T.mod - 1) ** 2
    sb = (bound.bit_length() + 8) // 8
    X = gmpy2.mpz(_pack_series(T, na, sb))
    Y = gmpy2.mpz(_pack_series(T, nb, sb))
    Z = int(X * Y)
    blk = (2 * T.e - 1) * T._A
    out_len = min(L, len(A) + len(B) - 2) + 1
    nbytes = max((Z.bit_length() + 7) // 8, 1)
    buf = Z.to_bytes(max(nbytes, out_len * blk * sb), "little")
    # precision of each output coefficient
    pa = [x.prec for x in A]
    pb = [x.prec for x in B]
    va = [x.vlb for x in A]
    vb = [x.vlb for x in B]
    exact = min(pa) >= T.cap and min(pb) >= T.cap and min(va) >= 0 and min(vb) >= 0
    res = []
    s = sa + sb_
    for k in range(out_len):
        base = k * blk * sb
        arr = [int.from_bytes(buf[base + t * sb: base + (t + 1) * sb], "little") for t in range(blk)]
        c = T._reduce_raw(arr)
        if exact:
            prec = T.cap
        else:
            prec = min(
                min(pa[i] + vb[k - i], pb[k - i] + va[i])
                for i in range(max(0, k - len(B) + 1), min(k, len(A) - 1) + 1)
            )
        res.append(T._make(c, s, prec))
    for k in range(out_len, L + 1):
        res.append(T.zero())
    return res


def twisted_power(M: PadicMatrix, a: int | None = None) -> PadicMatrix:
    """M M^(tau^-1) ... M^(tau^-(a-1))."""
    a = M.T.a if a is None else a
    out = M
    for k in range(1, a):
        out = out @ M.tau(-k)
    return out


def dump_matrix(M: PadicMatrix) -> dict:
    """Self-contained JSON form: tower parameters plus pi-basis coordinate rows."""
    T = M.T
    return {
        "p": T.p,
        "a": T.a,
        "N": T.N,
        "unram_poly": list(T.unram_poly),
        "rows": M.to_json(),
    }


def load_matrix(data: dict) -> PadicMatrix:
    try:
        p, a, N = int(data["p"]), int(data["a"]), int(data["N"])
        T = make_tower(p, a, N, tuple(data["unram_poly"]) if data.get("unram_poly") else None)
        rows = []
        for row in data["rows"]:
            out = []
            for x in row:
                coords = [int(v) % T.mod for blk in x["coords"] for v in blk]
                if len(coords) != T.n:
                    raise ValueError(f"entry has {len(coords)} coordinates, expected {T.n}")
                prec = Fraction(x["prec"]) * T.e
                if prec.denominator != 1:
                    raise ValueError(f"precision {x['prec']} is not a multiple of 1/{T.e}")
                out.append(T._make(coords, int(x["shift"]), int(prec)))
            rows.append(out)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix dump: {exc}") from None
    return PadicMatrix(T, rows)
