"""Triangularizing a tau^-1-semilinear Frobenius matrix by a contraction.

For M over O_a with delta(M) > m*eta(M) there is a unique upper
unitriangular C making M' = tau(C)^-1 M C lower triangular.  Because
tau(C)^-1 M C telescopes with M_a = M M^(tau^-1) ... M^(tau^-(a-1)),
the q-adic polygon of M_a is read off the diagonal of M', and both agree
with the hull of the leading-minor valuations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import PrecisionError
from .padic import AtLeast, PadicElem, PadicMatrix, char_poly, certified_polygon, twisted_power
from .polygon import Polygon, lower_hull


class HypothesisError(ValueError):
    """The input does not satisfy delta(M) > m*eta(M) (or a minor is singular)."""


def _val(x: PadicElem):
    v = x.val_units()
    return None if v is None else Fraction(v, x.T.e)


def minor_valuations(M: PadicMatrix, upto: int | None = None) -> list[Fraction]:
    """ord_p det M^[n] for n = 0..upto (default m); raises if a leading minor is not certified nonzero."""
    m = M.shape[0] if upto is None else upto
    out = [Fraction(0)]
    for n in range(1, m + 1):
        v = _val(M.leading(n).det())
        if v is None:
            raise HypothesisError(f"leading minor of size {n} is singular at working precision")
        out.append(v)
    return out


def delta_eta(M: PadicMatrix) -> tuple[Fraction, Fraction]:
    """(delta, eta), both scaled by p-1.

    Entries with no certified digit (exact structural zeros included) are
    left out of every row minimum and maximum; a row with no certified
    entry is an error.
    """
    n, m = M.shape
    if n != m:
        raise ValueError("square matrix required")
    e = M.T.e
    row_min, row_max = [], []
    for i in range(m):
        certified = [v for v in (_val(x) for x in M.rows[i]) if v is not None]
        if not certified:
            raise HypothesisError(f"row {i + 1} has no certified entry")
        row_min.append(min(certified))
        row_max.append(max(certified))
    delta = min((row_min[i + 1] - row_max[i] for i in range(m - 1)), default=Fraction(0)) * e
    minors = minor_valuations(M, m - 1)
    eta = Fraction(0)
    first = True
    for k in range(1, m):
        s = Fraction(0)
        for i in range(k):
            vals = [_val(M.rows[i][j]) for j in range(k + 1)]
            vals = [v for v in vals if v is not None]
            if not vals:
                raise HypothesisError(f"row {i + 1} has no certified entry among the first {k + 1}")
            s += min(vals)
        term = minors[k] - s
        eta = term if first else max(eta, term)
        first = False
    return delta, eta * e


@dataclass
class TriangResult:
    M: PadicMatrix
    C: PadicMatrix
    Mprime: PadicMatrix
    delta: Fraction
    eta: Fraction
    minor_vals: list[Fraction]
    iterations: int
    update_vals: list = field(default_factory=list)
    digits: int = 0
    findings: list[str] = field(default_factory=list)

    @property
    def diagonal_vals(self) -> list[Fraction | AtLeast]:
        m = self.Mprime.shape[0]
        return [self.Mprime[n, n].valuation() for n in range(m)]


def _unit_upper(T, m) -> list[list[PadicElem]]:
    return [[T.one() if i == j else T.zero() for j in range(m)] for i in range(m)]


def _exact(x: PadicElem) -> PadicElem:
    return PadicElem(x.T, x.c, x.s, (x.T.N - x.s) * x.T.e)


def _sweep_step(M: PadicMatrix, C: list[list[PadicElem]], invs, order, gauss_seidel: bool,
                gain: int) -> list[list[PadicElem]]:
    """One pass of the fixed-point map on the columns in ``order``.

    The current C is fed in as exact; since the map contracts by ``gain``
    pi-units, an error in C reappears at least ``gain`` units deeper.
    """
    T = M.T
    m = M.shape[0]
    floor = min((C[i][j].prec for i in range(m) for j in range(i + 1, m)), default=T.cap)
    work = [[_exact(x) for x in row] for row in C]
    new = [row[:] for row in C]

    def state():
        Cm = PadicMatrix(T, work)
        return Cm.tau(1).adjugate(), M @ Cm  # tau(C)^-1 is unitriangular with det 1

    D, MC = state()
    for j in order:
        if j == 0:
            continue
        if gauss_seidel:
            D, MC = state()
        rhs = []
        for i in range(j):
            s = M.rows[i][j]
            for k in range(i + 1, m):
                s = s + D[i, k] * MC[k, j]
            rhs.append(s)
        Minv = invs[j]
        for i in range(j):
            acc = T.zero()
            for k in range(j):
                acc = acc + Minv[i][k] * rhs[k]
            x = -acc
            new[i][j] = x.with_prec(min(x.prec, floor + gain))
            if gauss_seidel:
                work[i][j] = _exact(x)
    return new


def triangularize(M: PadicMatrix, N: int | None = None, order: str = "jacobi") -> TriangResult:
    """Fixed-point iteration for C, starting from the identity.

    ``order`` is "jacobi" (all columns from the previous sweep) or
    "reverse" (Gauss-Seidel, last column first), used to check uniqueness.
    ``N`` is a required number of p-adic digits; by default the run reports
    whatever the input precision supports.
    """
    T = M.T
    m = M.shape[0]
    delta, eta = delta_eta(M)
    if not delta > m * eta:
        raise HypothesisError(f"delta = {delta} does not exceed m*eta = {m * eta}")
    minors = minor_valuations(M)
    gain = int(delta - m * eta)  # pi-units, since delta and eta carry the factor p-1
    invs = [None] + [M.leading(j).inverse().rows for j in range(1, m)]
    C = _unit_upper(T, m)
    cols = list(range(m)) if order == "jacobi" else list(range(m - 1, -1, -1))
    updates = []
    # each sweep pushes the error at least gain pi-units deeper
    cap = m * (T.cap // gain + 4)
    for it in range(1, cap + 1):
        new = _sweep_step(M, C, invs, cols, order != "jacobi", gain)
        worst = None
        for i in range(m):
            for j in range(i + 1, m):
                v = (new[i][j] - C[i][j]).val_units()
                if v is not None:
                    worst = v if worst is None else min(worst, v)
        updates.append(None if worst is None else Fraction(worst, T.e))
        C = new
        if worst is None:
            break
    else:
        raise RuntimeError(f"triangularization did not converge in {cap} sweeps")
    Cm = PadicMatrix(T, C)
    Mp = Cm.tau(1).adjugate() @ M @ Cm
    digits = min(x.prec for row in Mp.rows for x in row)
    digits = min([digits] + [C[i][j].prec for i in range(m) for j in range(i + 1, m)]) // T.e
    if N is not None and digits < N:
        raise PrecisionError(f"only {digits} p-adic digits certified, {N} requested")
    res = TriangResult(M, Cm, Mp, delta, eta, minors, it, updates, digits)
    _check_postconditions(res)
    return res


def _check_postconditions(res: TriangResult) -> None:
    T = res.C.T
    m = res.C.shape[0]
    lower = -res.eta / T.e
    for i in range(m):
        if res.C[i, i].agrees(T.one()) is False:
            res.findings.append(f"C[{i + 1},{i + 1}] is not 1")
        for j in range(i + 1, m):
            v = _val(res.C[i, j])
            if v is not None and v < lower:
                res.findings.append(f"val C[{i + 1},{j + 1}] = {v} below -eta/(p-1) = {lower}")
            u = res.Mprime[i, j].val_units()
            if u is not None or res.Mprime[i, j].prec < res.digits * T.e:
                res.findings.append(f"M'[{i + 1},{j + 1}] is not zero mod p^{res.digits}")
    diag = []
    for n in range(m):
        v = _val(res.Mprime[n, n])
        if v is None:
            raise PrecisionError(f"diagonal entry {n + 1} of M' not certified")
        law = res.minor_vals[n + 1] - res.minor_vals[n]
        if v != law:
            res.findings.append(f"val M'[{n + 1},{n + 1}] = {v}, minor difference {law}")
        diag.append(v)
    for n in range(m - 1):
        if not diag[n] < diag[n + 1]:
            res.findings.append(f"diagonal valuations not strictly increasing at {n + 1}")
    cp = char_poly(res.M)
    for n in range(1, m + 1):
        v = _val(cp[n])
        if v != res.minor_vals[n]:
            res.findings.append(f"ord c'_{n} = {v} but ord det M^[{n}] = {res.minor_vals[n]}")


def minor_hull(M: PadicMatrix) -> Polygon:
    return lower_hull(list(enumerate(minor_valuations(M))))


@dataclass
class NPTheoremReport:
    twisted: Polygon
    single: Polygon
    minors: Polygon
    delta: Fraction
    eta: Fraction
    holds: bool

    def to_json(self) -> dict:
        return {
            "np_q_twisted_power": self.twisted.to_json(),
            "np_p_single": self.single.to_json(),
            "minor_hull": self.minors.to_json(),
            "delta": str(self.delta),
            "eta": str(self.eta),
            "holds": self.holds,
        }


def verify_np_theorem(M: PadicMatrix) -> NPTheoremReport:
    delta, eta = delta_eta(M)
    m = M.shape[0]
    if not delta > m * eta:
        raise HypothesisError(f"delta = {delta} does not exceed m*eta = {m * eta}")
    a = M.T.a
    Ma = twisted_power(M, a)
    P1 = certified_polygon(char_poly(Ma).valuations(), a)
    P2 = certified_polygon(char_poly(M).valuations(), 1)
    P3 = minor_hull(M)
    holds = P1 == P2 == P3
    return NPTheoremReport(P1, P2, P3, delta, eta, holds)
