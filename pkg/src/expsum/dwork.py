"""Dwork's p-adic route to the L-polynomial.

The splitting series G(X) = prod_i theta(a_i X^i) is built as an exact
product of truncated series.  The Frobenius matrix on the quotient
L^1 / nabla(L) is computed by conjugating nabla into the polynomial
operator nabla_0 = X d/dX + gamma X f'(X):

    nabla = exp(-S) . nabla_0 . exp(S),   S = R - gamma f(X),

so the class of a series s is read off from the finite top-down elimination
of exp(S) s against nabla_0, followed by the change of basis that sends
the classes of X, ..., X^(d-1) back to themselves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .charsum import CycInt, MonicPoly, l_polynomial
from .errors import Finding, PrecisionError
from .padic import (
    PadicElem,
    PadicMatrix,
    PadicPoly,
    Tower,
    _log_terms,
    artin_hasse_rationals,
    char_poly,
    gamma_truncation,
    make_tower,
    series_mul,
    teichmuller,
    twisted_power,
)


def artin_hasse_coeffs(p: int, m_max: int, tower: Tower) -> list[PadicElem]:
    """lambda_m = e_m gamma^m for m = 0..m_max."""
    if tower.p != p:
        raise ValueError("tower built for a different prime")
    e = artin_hasse_rationals(p, m_max)
    out = []
    g = tower.one()
    for m in range(m_max + 1):
        out.append(g * e[m])
        g = g * tower.gamma
    return out


@dataclass
class SeriesTrunc:
    """B_0..B_D plus a growth certificate: every B_n, stored or omitted,
    has valuation at least c*n + b.
    """

    coeffs: list[PadicElem]
    c: Fraction
    b: Fraction
    exact_tail: bool = False

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def polynomial(cls, coeffs: Sequence[PadicElem], c: Fraction) -> "SeriesTrunc":
        """A polynomial, certified with slope c and the best offset for it."""
        e = coeffs[0].T.e
        b = min((Fraction(x.vlb, e) - c * n for n, x in enumerate(coeffs)), default=Fraction(0))
        b = min(b, Fraction(0))
        return cls(list(coeffs), Fraction(c), b, exact_tail=True)


def choose_degree(d: int, p: int, N: int) -> int:
    """Series degree for the Frobenius columns: at least d(N+4), raised
    if needed so that the omitted tail stays above N after reduction.
    """
    c = _exp_s_slope(d, p)
    b = -Fraction(d - 1, d * (p - 1))
    return max(d * (N + 4), _certified_degree(c, b, d, p, N + 1, 0))


def _exp_s_slope(d: int, p: int) -> Fraction:
    # val gamma_1 / (d p), the smallest slope among the l >= 1 terms of S
    return Fraction(p * p - 2 * p + 2, d * p * (p - 1))


def _certified_degree(c: Fraction, b: Fraction, d: int, p: int, target, minimum: int) -> int:
    loss = Fraction(1, d * (p - 1))
    if c <= loss:
        raise ValueError("growth slope too small for a certified reduction")
    D = max(minimum, 1)
    # tail bound: c(D+1) + b - D*loss >= target
    need = (Fraction(target) - b - c) / (c - loss)
    D = max(D, math.ceil(need))
    return D


def working_precision(d: int, p: int, N: int, D: int) -> int:
    """Storage digits: target, plus reduction loss, plus a small guard."""
    return N + math.ceil(Fraction(D, d * (p - 1))) + math.ceil(math.log(max(D, 2), p)) + 2


class FrobeniusData:
    """All Dwork-side data for one polynomial over F_q at one precision."""

    def __init__(self, f: MonicPoly, N: int | None = None, D: int | None = None,
                 unram_poly: Sequence[int] | None = None, tower: Tower | None = None):
        p, a, d = f.p, f.a, f.d
        if d % p == 0:
            raise ValueError(f"p={p} divides d={d}")
        if d < 2:
            raise ValueError("degree must be at least 2")
        self.f = f
        self.p, self.a, self.d = p, a, d
        self.N = N if N is not None else d + 5
        self.D = D if D is not None else choose_degree(d, p, self.N)
        if tower is None:
            W = working_precision(d, p, self.N, self.D)
            tower = make_tower(p, a, W, unram_poly)
        self.T = tower
        T = tower
        self.ahat = [T.zero()] + [teichmuller(T, f.coeffs[i]) for i in range(1, d)] + [T.one()]
        self._G: list[PadicElem] = []
        self._expS: list[PadicElem] = []
        self._P_cols: dict[int, list[PadicElem]] = {}

    # -- splitting series --------------------------------------------------------

    def lambdas(self, m_max: int) -> list[PadicElem]:
        if len(getattr(self, "_lam", [])) <= m_max:
            self._lam = artin_hasse_coeffs(self.p, max(m_max, self.p), self.T)
        return self._lam[: m_max + 1]

    def theta_series(self, i: int, L: int) -> list[PadicElem]:
        """theta(a_i X^i) up to degree L."""
        T = self.T
        out = [T.zero() for _ in range(L + 1)]
        lam = self.lambdas(L // i)
        pw = T.one()
        ai = self.ahat[i]
        for m in range(L // i + 1):
            out[i * m] = lam[m] * pw
            pw = pw * ai
        return out

    def G_series(self, L: int) -> list[PadicElem]:
        if len(self._G) > L:
            return self._G[: L + 1]
        G = self.theta_series(self.d, L)
        for i in range(1, self.d):
            if not self.ahat[i].val_units() is None:
                G = series_mul(G, self.theta_series(i, L), L)
        self._G = G
        return G

    def g_n(self, n: int) -> PadicElem:
        if n < 0:
            return self.T.zero()
        return self.G_series(max(n, len(self._G) - 1))[n]

    def g_n_compositions(self, n: int) -> PadicElem:
        """G_n as the finite sum over sum_l l m_l = n (independent check)."""
        T, d = self.T, self.d
        lam = self.lambdas(n)
        total = T.zero()
        for m in _compositions(n, d):
            term = T.one()
            for ell, k in enumerate(m, start=1):
                if k:
                    term = term * lam[k] * (self.ahat[ell] ** k)
            total = total + term
        return total

    def fdagger(self) -> PadicMatrix:
        d, p = self.d, self.p
        self.G_series(p * (d - 1))
        rows = []
        for i in range(1, d):
            rows.append([self.g_n(p * i - j).tau(-1) for j in range(1, d)])
        return PadicMatrix(self.T, rows)

    # -- nabla and its reduction ---------------------------------------------

    @cached_property
    def _log_terms(self) -> list[PadicElem]:
        return _log_terms(self.T.gamma, gamma_truncation(self.p, self.T.N))

    def gamma_ell(self, ell: int) -> PadicElem:
        """-sum_{j > l} gamma^(p^j)/p^j, equal to the partial log sum up to l."""
        z = self._log_terms
        out = self.T.zero()
        for j in range(ell + 1, len(z)):
            out = out - z[j]
        return out

    def gamma_ell_partial(self, ell: int) -> PadicElem:
        z = self._log_terms
        out = self.T.zero()
        for j in range(0, min(ell + 1, len(z))):
            out = out + z[j]
        return out

    def _ahat_pow(self, i: int, ell: int) -> PadicElem:
        # Teichmuller lifts satisfy a^p = tau(a)
        return self.ahat[i].tau(ell)

    def xrprime(self, L: int) -> list[PadicElem]:
        """Coefficients of X R'(X) up to degree L."""
        T, p, d = self.T, self.p, self.d
        out = [T.zero() for _ in range(L + 1)]
        ell = 0
        while p**ell <= L:
            g = T.gamma if ell == 0 else self.gamma_ell(ell)
            if g.val_units() is not None or ell == 0:
                for i in range(1, d + 1):
                    deg = i * p**ell
                    if deg <= L:
                        out[deg] = out[deg] + g * self._ahat_pow(i, ell) * (i * p**ell)
            ell += 1
        return out

    def nabla(self, t: Sequence[PadicElem]) -> list[PadicElem]:
        """nabla(t) for a polynomial t, exact up to terms below storage precision."""
        T = self.T
        deg = len(t) - 1
        J = gamma_truncation(self.p, T.N)
        L = deg + self.d * self.p ** max(J - 1, 0)
        xr = self.xrprime(L)
        out = series_mul(xr, list(t) + [T.zero()] * (L + 1 - len(t)), L)
        for n, x in enumerate(t):
            if n:
                out[n] = out[n] + x * n
        while len(out) > 1 and out[-1].val_units() is None and out[-1].prec >= T.cap:
            out.pop()
        return out

    def exp_S(self, L: int) -> list[PadicElem]:
        """exp(S) up to degree L, S the l >= 1 part of R."""
        if len(self._expS) > L:
            return self._expS[: L + 1]
        T, p, d = self.T, self.p, self.d
        s = {}
        ell = 1
        while p**ell <= L:
            g = self.gamma_ell(ell)
            if g.val_units() is not None:
                for i in range(1, d + 1):
                    deg = i * p**ell
                    if deg <= L:
                        s[deg] = s.get(deg, T.zero()) + g * self._ahat_pow(i, ell)
            ell += 1
        E = [T.one()]
        for n in range(1, L + 1):
            acc = T.zero()
            for k, sk in s.items():
                if k <= n:
                    acc = acc + sk * E[n - k] * k
            E.append(acc * Fraction(1, n))
        self._expS = E
        return E

    def _red0(self, B: list[PadicElem]) -> list[PadicElem]:
        """Top-down elimination of X^n, n >= d, against the image of nabla_0."""
        T, d = self.T, self.d
        B = list(B)
        inv_dg = (T.gamma * d).inverse()
        w = [None] + [self.ahat[i] * Fraction(i, d) for i in range(1, d)]
        live = [i for i in range(1, d) if self.ahat[i].val_units() is not None or self.ahat[i].prec < T.cap]
        for n in range(len(B) - 1, d - 1, -1):
            b = B[n]
            m = n - d
            if b.val_units() is None:
                if b.prec < T.cap:
                    if m >= 1:
                        B[m] = B[m].with_prec(b.prec - 1)
                    for i in live:
                        B[m + i] = B[m + i].with_prec(b.prec)
                continue
            if m >= 1:
                B[m] = B[m] - (b * inv_dg) * m
            for i in live:
                B[m + i] = B[m + i] - b * w[i]
        return B[1:d]

    def _reduce_series(self, s: SeriesTrunc) -> list[PadicElem]:
        T, d, p = self.T, self.d, self.p
        c = min(s.c, _exp_s_slope(d, p))
        D = _certified_degree(c, s.b, d, p, self.N + 1, s.degree)
        coeffs = list(s.coeffs)
        if len(coeffs) < D + 1:
            if not s.exact_tail:
                raise PrecisionError(f"series known to degree {s.degree}, reduction needs {D}")
            coeffs = coeffs + [T.zero()] * (D + 1 - len(coeffs))
        if coeffs[0].val_units() is not None:
            raise ValueError("series must have no constant term")
        prod = series_mul(self.exp_S(D), coeffs, D)
        red = self._red0(prod)
        tail = c * (D + 1) + s.b - Fraction(D, d * (p - 1))
        cap = math.floor(tail * T.e)
        return [x.with_prec(cap) for x in red]

    @cached_property
    def basis_change(self) -> PadicMatrix:
        """Inverse of the matrix whose columns reduce exp(S) X^i."""
        T, d = self.T, self.d
        cols = []
        for i in range(1, d):
            coeffs = [T.zero() for _ in range(i + 1)]
            coeffs[i] = T.one()
            cols.append(self._reduce_series(SeriesTrunc.polynomial(coeffs, _exp_s_slope(d, self.p))))
        Pm = PadicMatrix(T, [[cols[j][i] for j in range(d - 1)] for i in range(d - 1)])
        return Pm.inverse()

    def nabla_reduce(self, s: SeriesTrunc | Sequence[PadicElem]) -> list[PadicElem]:
        """Coordinates of the class of s on the basis X, ..., X^(d-1)."""
        if not isinstance(s, SeriesTrunc):
            s = SeriesTrunc.polynomial(list(s), _exp_s_slope(self.d, self.p))
        r = self._reduce_series(s)
        Pinv = self.basis_change
        m = self.d - 1
        out = []
        for i in range(m):
            acc = self.T.zero()
            for k in range(m):
                acc = acc + Pinv[i, k] * r[k]
            out.append(acc)
        return out

    # -- Frobenius ------------------------------------------------------------

    def frobenius_column_series(self, j: int) -> SeriesTrunc:
        T, p, d = self.T, self.p, self.d
        D = self.D
        G = self.G_series(p * D)
        coeffs = [T.zero()] + [G[p * n - j].tau(-1) for n in range(1, D + 1)]
        return SeriesTrunc(coeffs, Fraction(p, d * (p - 1)), -Fraction(j, d * (p - 1)))

    @cached_property
    def F(self) -> PadicMatrix:
        d = self.d
        cols = [self.nabla_reduce(self.frobenius_column_series(j)) for j in range(1, d)]
        return PadicMatrix(self.T, [[cols[j][i] for j in range(d - 1)] for i in range(d - 1)])

    def frobenius_F(self) -> PadicMatrix:
        return self.F

    def frobenius_power(self, F: PadicMatrix | None = None) -> PadicMatrix:
        return twisted_power(self.F if F is None else F, self.a)

    def dwork_l_function(self) -> PadicPoly:
        """det(I - T F_a), twisted back by the constant term of f."""
        L = char_poly(self.frobenius_power())
        t = self._const_trace()
        if t:
            w = self.T.from_cyclotomic(CycInt.zeta_power(self.p, t).coords)
            coeffs = []
            pw = self.T.one()
            for c in L.coeffs:
                coeffs.append(c * pw)
                pw = pw * w
            L = PadicPoly(coeffs)
        return L

    def _const_trace(self) -> int:
        F = self.T.residue_field
        return F.trace(F.elem(list(self.f.coeffs[0]))) if any(self.f.coeffs[0]) else 0

    def diff_violations(self) -> tuple[list, list]:
        """Entries where F - F^dagger breaks (or cannot certify) the closeness bound."""
        F, Fd = self.F, self.fdagger()
        d, p = self.d, self.p
        bad, uncertified = [], []
        for i in range(1, d):
            for j in range(1, d):
                bound = Fraction(p * i - j + p, d)  # in pi-units
                diff = F[i - 1, j - 1] - Fd[i - 1, j - 1]
                v = diff.val_units()
                if v is not None and v < bound:
                    bad.append((i, j, Fraction(v, p - 1)))
                elif v is None and diff.prec < bound:
                    uncertified.append((i, j))
        return bad, uncertified

    # -- comparison with the character-sum oracle ------------------------------

    def oracle_coefficients(self) -> list[CycInt]:
        return l_polynomial(self.f, self.T.unram_poly)

    def compare_with_oracle(self, oracle: Sequence[CycInt] | None = None) -> dict:
        oracle = self.oracle_coefficients() if oracle is None else oracle
        L = self.dwork_l_function()
        floor = self.N * self.T.e
        agree = True
        worst = None
        for n, (x, b) in enumerate(zip(L.coeffs, oracle)):
            diff = x - self.T.from_cyclotomic(b.coords)
            if diff.prec < floor:
                raise PrecisionError(f"coefficient {n} known only to {Fraction(diff.prec, self.T.e)} digits")
            v = diff.val_units()
            if v is not None and v < floor:
                agree = False
                worst = n if worst is None else worst
        return {"agree": agree, "first_mismatch": worst, "floor": self.N}


def _compositions(n: int, d: int):
    """All (m_1..m_d) >= 0 with sum l m_l = n."""
    def rec(ell, rest):
        if ell == 1:
            yield (rest,)
            return
        for k in range(rest // ell + 1):
            for tail in rec(ell - 1, rest - ell * k):
                yield tail + (k,)
    for m in rec(d, n):
        yield m


def frobenius_data(f: MonicPoly, N: int | None = None, D: int | None = None,
                   unram_poly: Sequence[int] | None = None) -> FrobeniusData:
    return FrobeniusData(f, N=N, D=D, unram_poly=unram_poly)


def dwork_l_function(data: FrobeniusData) -> PadicPoly:
    return data.dwork_l_function()


def fdagger(data: FrobeniusData) -> PadicMatrix:
    return data.fdagger()


def g_n(data: FrobeniusData, n: int) -> PadicElem:
    return data.g_n(n)


def nabla_reduce(data: FrobeniusData, s) -> list[PadicElem]:
    return data.nabla_reduce(s)


def frobenius_F(data: FrobeniusData) -> PadicMatrix:
    return data.F


def frobenius_power(data: FrobeniusData, F: PadicMatrix | None = None) -> PadicMatrix:
    return data.frobenius_power(F)
