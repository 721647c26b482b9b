"""Experiment drivers behind the command line: reports, scans, retries."""
from __future__ import annotations

import csv
import io
import itertools
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .charsum import MonicPoly, ext_field, format_residue, l_polynomial, parse_residue, polygon_of
from .dwork import FrobeniusData, choose_degree, working_precision
from .errors import Finding, PrecisionError, ResourceGuard
from .ffield import find_irreducible, is_prime
from .gnp import gnp_polygon, membership, residue_table
from .padic import certified_polygon, dump_matrix, load_matrix
from .polygon import Polygon, dilate, frac_str, hodge_polygon, lies_above, pointwise_min
from .semilinear import HypothesisError, delta_eta, triangularize, verify_np_theorem

MAX_RETRIES = 3
SCAN_GUARD = 2**20


def check_prime_params(d: int, p: int, a: int = 1) -> None:
    if d < 2:
        raise ValueError(f"degree d={d} must be at least 2")
    if a < 1:
        raise ValueError(f"extension degree a={a} must be positive")
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if p == 2:
        raise ValueError("p=2 is not supported")
    if d % p == 0:
        raise ValueError(f"p={p} divides d={d}")


def parse_coeffs(text: str | Sequence, p: int, a: int, d: int) -> tuple[MonicPoly, bool]:
    """a_0..a_(d-1) (comma list or sequence) -> polynomial with a_0 dropped, dropped flag."""
    items = [x.strip() for x in text.split(",")] if isinstance(text, str) else list(text)
    if len(items) != d:
        raise ValueError(f"expected {d} coefficients a_0..a_{d - 1}, got {len(items)}")
    f = MonicPoly(p, a, tuple(parse_residue(x, p, a) for x in items))
    dropped = any(f.coeffs[0])
    return f.without_constant(), dropped


def slopes_str(P: Polygon) -> str:
    return " ".join(frac_str(s) for s in P.slopes)


@dataclass
class RunReport:
    d: int
    p: int
    a: int
    f: MonicPoly
    embedding: dict
    precision: dict
    oracle: Polygon | None
    dwork: Polygon | None
    hodge: Polygon
    gnp: Polygon | None
    trace_match: bool | None
    delta: Fraction | None = None
    eta: Fraction | None = None
    notices: list[str] = field(default_factory=list)
    findings: list[str] = field(default_factory=list)
    timings: dict | None = None
    data: FrobeniusData | None = field(default=None, repr=False, compare=False)

    @property
    def flags(self) -> dict:
        # every flag is recomputed from the stored polygons
        P = self.oracle or self.dwork
        m = self.d - 1
        return {
            "trace_formula_match": self.trace_match,
            "np_eq_hp": None if P is None else P == self.hodge,
            "np_eq_gnp": None if P is None or self.gnp is None else P == self.gnp,
            "delta_gt_m_eta": None if self.delta is None else self.delta > m * self.eta,
        }

    def to_json(self) -> dict:
        out = {
            "input": {
                "d": self.d,
                "p": self.p,
                "a": self.a,
                "f": str(self.f),
                "coeffs": [list(c) for c in self.f.coeffs],
                "embedding": self.embedding,
                "precision": self.precision,
            },
            "oracle_polygon": None if self.oracle is None else self.oracle.to_json(),
            "dwork_polygon": None if self.dwork is None else self.dwork.to_json(),
            "hodge_polygon": self.hodge.to_json(),
            "gnp_polygon": None if self.gnp is None else self.gnp.to_json(),
            "delta": None if self.delta is None else str(self.delta),
            "eta": None if self.eta is None else str(self.eta),
            "flags": self.flags,
            "notices": self.notices,
            "findings": self.findings,
        }
        if self.timings is not None:
            out["timings_ms"] = self.timings
        return out


def _gnp_or_none(d: int, p: int, a: int) -> Polygon | None:
    if a != 1:
        return None
    return gnp_polygon(d, p).polygon


def run_dwork(f: MonicPoly, N: int | None, oracle=None, retries: int = MAX_RETRIES,
              unram_poly=None) -> tuple[FrobeniusData, dict, dict]:
    """Dwork path with the precision retry policy: double N and D on failure."""
    d, p = f.d, f.p
    N = N if N is not None else d + 5
    D = choose_degree(d, p, N)
    last = None
    for attempt in range(retries + 1):
        try:
            data = FrobeniusData(f, N=N, D=D, unram_poly=unram_poly)
            cmp = data.compare_with_oracle(oracle) if oracle is not None else None
            L = data.dwork_l_function()
            certified_polygon(L.valuations(), f.a)
            prec = {
                "N": N,
                "D": D,
                "working_digits": working_precision(d, p, N, D),
                "retries": attempt,
            }
            return data, prec, cmp
        except PrecisionError as exc:
            last = exc
            N, D = 2 * N, 2 * D
    raise PrecisionError(f"precision exhausted after {retries} retries: {last}")


def cmd_np(d: int, p: int, a: int, coeffs, prec: int | None = None, timings: bool = False,
           run_oracle: bool = True) -> RunReport:
    check_prime_params(d, p, a)
    f, dropped = parse_coeffs(coeffs, p, a, d)
    notices = []
    if dropped:
        notices.append("constant term a_0 discarded: it twists each b_n by a root of unity only")
    t = {}
    t0 = time.perf_counter()
    g = find_irreducible(p, a)
    oracle_coeffs = l_polynomial(f, g) if run_oracle else None
    oracle = polygon_of(oracle_coeffs, a) if run_oracle else None
    t["oracle"] = round((time.perf_counter() - t0) * 1000)
    t0 = time.perf_counter()
    data, precision, cmp = run_dwork(f, prec, oracle_coeffs, unram_poly=g)
    L = data.dwork_l_function()
    dw = certified_polygon(L.valuations(), a)
    t["dwork"] = round((time.perf_counter() - t0) * 1000)
    findings = []
    if oracle is not None and not lies_above(oracle, hodge_polygon(d)):
        findings.append(f"oracle polygon {oracle} dips below the Hodge polygon")
    if cmp is not None and not cmp["agree"]:
        findings.append(f"Dwork and oracle coefficients disagree from index {cmp['first_mismatch']}")
    if oracle is not None and oracle != dw:
        findings.append(f"oracle polygon {oracle} differs from Dwork polygon {dw}")
    try:
        delta, eta = delta_eta(data.fdagger())
    except HypothesisError as exc:
        delta = eta = None
        notices.append(f"delta/eta unavailable: {exc}")
    embedding = {"unram_poly": list(g), "teichmuller": "coefficients lifted by x -> x^q fixed point",
                 "zeta_embedding": "zeta_p -> 1 + pi"}
    if run_oracle and p**a <= 2**22:
        embedding.update(ext_field(p, a, 1, g).describe())
    rep = RunReport(d, p, a, f, embedding, precision, oracle, dw, hodge_polygon(d),
                    _gnp_or_none(d, p, a), None if cmp is None else cmp["agree"], delta, eta,
                    notices, findings, t if timings else None, data)
    return rep


def matrix_dumps(data: FrobeniusData) -> dict:
    return {"F": dump_matrix(data.F), "Fdagger": dump_matrix(data.fdagger())}


# -- scans ------------------------------------------------------------------------

def _scan_chunk(args) -> list[str]:
    p, d, vectors = args
    out = []
    for vec in vectors:
        f = MonicPoly.from_ints(p, 1, (0,) + tuple(vec))
        out.append(polygon_of(l_polynomial(f), 1))
    return [P.to_json() for P in out]


def parse_mode(mode: str) -> tuple[str, int | None]:
    mode = mode.strip().lower()
    if mode == "exhaustive":
        return "exhaustive", None
    for sep in (":", " ", "="):
        if mode.startswith("sample" + sep):
            k = int(mode[len("sample") + 1:])
            if k < 1:
                raise ValueError("sample size must be positive")
            return "sample", k
    raise ValueError(f"unknown mode {mode!r}: use 'exhaustive' or 'sample:K'")


@dataclass
class ScanRow:
    p: int
    r: int
    observed: Polygon
    gnp: Polygon
    hp: Polygon
    n_attaining: int
    total: int
    mode: str
    runtime_ms: int | None

    @property
    def eq_obs_gnp(self) -> bool:
        return self.observed == self.gnp

    @property
    def eq_obs_hp(self) -> bool:
        return self.observed == self.hp

    def role(self) -> str:
        return "infimum" if self.mode == "exhaustive" else "upper bound on GNP"

    def csv_row(self) -> list:
        return [self.p, self.r, slopes_str(self.observed), slopes_str(self.gnp), slopes_str(self.hp),
                self.eq_obs_gnp, self.eq_obs_hp, self.n_attaining,
                "" if self.runtime_ms is None else self.runtime_ms]

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "r": self.r,
            "mode": self.mode,
            "observed_polygon": self.observed.to_json(),
            "observed_role": self.role(),
            "gnp_polygon": self.gnp.to_json(),
            "hp_polygon": self.hp.to_json(),
            "eq_obs_gnp": self.eq_obs_gnp,
            "eq_obs_hp": self.eq_obs_hp,
            "n_attaining": self.n_attaining,
            "total": self.total,
            "runtime_ms": self.runtime_ms,
        }


CSV_COLUMNS = ["p", "r", "obs_slopes", "gnp_slopes", "hp_slopes", "eq_obs_gnp", "eq_obs_hp",
               "n_attaining", "runtime_ms"]


def scan_vectors(d: int, p: int, mode: str, k: int | None, seed: int) -> list[tuple[int, ...]]:
    total = p ** (d - 1)
    if mode == "exhaustive":
        if total > SCAN_GUARD:
            raise ResourceGuard(f"exhaustive scan needs p^(d-1) = {total} > 2^20 polynomials")
        return list(itertools.product(range(p), repeat=d - 1))
    rng = random.Random(f"scan {d} {p} {seed}")
    if k >= total:
        return list(itertools.product(range(p), repeat=d - 1))
    picks = sorted(rng.sample(range(total), k))
    out = []
    for code in picks:
        vec = []
        for _ in range(d - 1):
            code, digit = divmod(code, p)
            vec.append(digit)
        out.append(tuple(vec))
    return out


def cmd_scan(d: int, primes: Sequence[int], mode: str = "exhaustive", seed: int = 0,
             jobs: int = 1, timings: bool = False) -> list[ScanRow]:
    kind, k = parse_mode(mode)
    for p in primes:
        check_prime_params(d, p)
    rows = []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for p in primes:
            t0 = time.perf_counter()
            vecs = scan_vectors(d, p, kind, k, seed)
            size = max(1, math.ceil(len(vecs) / (4 * max(jobs, 1))))
            chunks = [(p, d, vecs[i:i + size]) for i in range(0, len(vecs), size)]
            results = pool.map(_scan_chunk, chunks) if pool else map(_scan_chunk, chunks)
            polys = [Polygon.from_json(x) for chunk in results for x in chunk]
            obs = pointwise_min(polys)
            gnp = gnp_polygon(d, p).polygon
            hp = hodge_polygon(d)
            for P in polys:
                if not lies_above(P, hp):
                    raise Finding(f"a polygon at p={p} dips below the Hodge polygon")
            n_att = sum(P == obs for P in polys)
            ms = round((time.perf_counter() - t0) * 1000) if timings else None
            rows.append(ScanRow(p, p % d, obs, gnp, hp, n_att, len(polys), kind, ms))
    finally:
        if pool:
            pool.shutdown()
    return rows


def scan_csv(rows: Sequence[ScanRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_row())
    return buf.getvalue()


# -- the remaining commands -------------------------------------------------------

def cmd_gnp(d: int, p: int):
    check_prime_params(d, p)
    return gnp_polygon(d, p)


def parse_rationals(text: str | Sequence) -> list[Fraction]:
    items = [x.strip() for x in text.split(",")] if isinstance(text, str) else list(text)
    try:
        return [Fraction(x) for x in items]
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational coefficient: {exc}") from None


def cmd_membership(d: int, r: int, coeffs, p: int | None = None, a: int = 1) -> dict:
    residue_table(d, r)
    if p is None:
        vec = parse_rationals(coeffs)
        res = membership(d, r, vec)
        field_desc = "Q"
        shown = [str(x) for x in vec]
    else:
        check_prime_params(d, p, a)
        if p % d != r:
            raise ValueError(f"p={p} is not congruent to r={r} mod {d}")
        items = [x.strip() for x in coeffs.split(",")] if isinstance(coeffs, str) else list(coeffs)
        vec = [parse_residue(x, p, a) for x in items]
        res = membership(d, r, vec, p=p, a=a)
        field_desc = f"F_{p}^{a}"
        shown = [format_residue(x) for x in vec]
    out = {"d": d, "r": r, "field": field_desc, "coeffs": shown}
    out.update(res.to_json())
    return out


def cmd_triangularize(matrix: dict | None = None, d: int | None = None, p: int | None = None,
                      a: int = 1, coeffs=None, prec: int | None = None) -> dict:
    if matrix is not None:
        if "rows" not in matrix and "Fdagger" in matrix:
            matrix = matrix["Fdagger"]
        M = load_matrix(matrix)
        source = "matrix dump"
    else:
        check_prime_params(d, p, a)
        f, _ = parse_coeffs(coeffs, p, a, d)
        M = FrobeniusData(f, N=prec).fdagger()
        source = f"F-dagger of {f}"
    res = triangularize(M)
    rep = verify_np_theorem(M)
    flags = {
        "C_unitriangular_bound": not any("C[" in x or "val C" in x for x in res.findings),
        "Mprime_lower_triangular": not any("M'[" in x and "zero mod" in x for x in res.findings),
        "diagonal_law": not any("minor difference" in x for x in res.findings),
        "diagonal_increasing": not any("strictly increasing" in x for x in res.findings),
        "np_threefold_equality": rep.holds,
    }
    return {
        "source": source,
        "p": M.T.p,
        "a": M.T.a,
        "delta": str(res.delta),
        "eta": str(res.eta),
        "iterations": res.iterations,
        "certified_digits": res.digits,
        "minor_valuations": [str(v) for v in res.minor_vals],
        "diagonal_valuations": [str(v) for v in res.diagonal_vals],
        "polygons": rep.to_json(),
        "flags": flags,
        "findings": res.findings,
        "pass": all(flags.values()) and not res.findings,
    }


def cmd_counterexample(d: int, p: int, seed: int = 0, prec: int | None = None) -> dict:
    check_prime_params(d, p)
    if p % d != d - 1:
        raise ValueError(f"wrong residue class: need p = -1 mod d, but p mod {d} = {p % d}")
    rng = random.Random(f"counterexample {d} {p} {seed}")
    small = [rng.randrange(1, 10) for _ in range(d - 1)]
    lift = [p * c for c in small]
    f = MonicPoly.from_ints(p, 1, [0] * d)  # the reduction of x^d + p*(...) is x^d
    oracle = polygon_of(l_polynomial(f), 1)
    data, precision, cmp = run_dwork(f, prec, l_polynomial(f))
    dw = certified_polygon(data.dwork_l_function().valuations(), 1)
    r = p % d
    mem_red = membership(d, r, [0] * (d - 1))
    mem_lift = membership(d, r, lift)
    half_line = all(s == Fraction(1, 2) for s in oracle.slopes)
    gnp = gnp_polygon(d, p).polygon
    return {
        "d": d,
        "p": p,
        "lift": "x^%d + %d*(%s)" % (d, p, " + ".join(f"{c}*x^{i}" for i, c in enumerate(small, start=1))),
        "lift_coeffs_a1_to_a_d-1": lift,
        "reduction": f"x^{d}",
        "oracle_polygon": oracle.to_json(),
        "dwork_polygon": dw.to_json(),
        "trace_formula_match": cmp["agree"],
        "gnp_polygon": gnp.to_json(),
        "hodge_polygon": hodge_polygon(d).to_json(),
        "np_is_slope_half_line": half_line,
        "reduction_in_W_r": mem_red.in_W,
        "lift_in_W_r_over_Q": mem_lift.in_W,
        "precision": precision,
    }


def cmd_curve(poly: Polygon, p: int) -> Polygon:
    d = poly.length + 1
    check_prime_params(d, p)
    return dilate(poly, p - 1)


def cmd_hodge(d: int) -> Polygon:
    if d < 2:
        raise ValueError("degree must be at least 2")
    return hodge_polygon(d)
