"""Command line: expsum <subcommand> [flags]; see --help on each subcommand."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .errors import Finding, PrecisionError, ResourceGuard
from .polygon import Polygon
from .semilinear import HypothesisError

EXIT_OK, EXIT_INPUT, EXIT_GUARD, EXIT_PRECISION, EXIT_FINDING = 0, 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_INPUT)


def _common(sp, *names):
    if "d" in names:
        sp.add_argument("--d", type=int, required=True, help="degree of f")
    if "p" in names:
        sp.add_argument("--p", type=int, required=True, help="the prime")
    if "a" in names:
        sp.add_argument("--a", type=int, default=1, help="F_q = F_(p^a)")
    if "coeffs" in names:
        sp.add_argument("--coeffs", help="comma separated coefficients, lowest degree first")
    if "prec" in names:
        sp.add_argument("--prec", type=int, help="target p-adic digits for the Dwork path")
    if "seed" in names:
        sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", choices=["json", "csv"], default="json")
    sp.add_argument("--timings", action="store_true", help="include wall-clock timings (not deterministic)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="expsum", description="L-functions and Newton polygons of exponential sums")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    sp = sub.add_parser("np", help="oracle and Dwork polygons for one f")
    _common(sp, "d", "p", "a", "coeffs", "prec")
    sp.add_argument("--dump", help="write the F and F-dagger matrices to this JSON file")

    sp = sub.add_parser("scan", help="infimum of NP over f with a_0 = 0, per prime")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--p", required=True, help="comma separated primes")
    sp.add_argument("--mode", default="exhaustive", help="exhaustive or sample:K")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", choices=["json", "csv"], default="csv")
    sp.add_argument("--timings", action="store_true")

    sp = sub.add_parser("gnp", help="asymptotic generic Newton polygon formula")
    _common(sp, "d", "p")

    sp = sub.add_parser("membership", help="membership of a_1..a_(d-1) in X_r, Y_r, W_r")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--coeffs", required=True, help="a_1..a_(d-1): rationals, or residues with --p")
    sp.add_argument("--p", type=int, help="reduce mod p and evaluate over F_(p^a)")
    sp.add_argument("--a", type=int, default=1)
    sp.add_argument("--out", choices=["json", "csv"], default="json")
    sp.add_argument("--timings", action="store_true")

    sp = sub.add_parser("triangularize", help="semilinear triangularization of F-dagger or a dump")
    sp.add_argument("--matrix", help="JSON matrix dump")
    sp.add_argument("--d", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--a", type=int, default=1)
    sp.add_argument("--coeffs")
    sp.add_argument("--prec", type=int)
    sp.add_argument("--out", choices=["json", "csv"], default="json")
    sp.add_argument("--timings", action="store_true")

    sp = sub.add_parser("counterexample", help="x^d + p*(...) at p = -1 mod d")
    _common(sp, "d", "p", "seed", "prec")

    sp = sub.add_parser("curve", help="Artin-Schreier curve polygon: dilate by p-1")
    sp.add_argument("--polygon", required=True, help="polygon JSON, or a file containing it")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--out", choices=["json", "csv"], default="json")
    sp.add_argument("--timings", action="store_true")

    sp = sub.add_parser("hodge", help="the Hodge polygon of degree d")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--out", choices=["json", "csv"], default="json")
    sp.add_argument("--timings", action="store_true")
    return ap


def _load_json_arg(text: str):
    path = Path(text)
    if not text.lstrip().startswith(("{", "[")) and path.exists():
        text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed JSON: {exc}") from None


def _emit(obj, out) -> None:
    out.write(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def _run(args, out, err) -> int:
    if args.out == "csv" and args.cmd != "scan":
        raise ValueError("csv output is only available for scan")
    if args.cmd == "np":
        if args.coeffs is None:
            raise ValueError("--coeffs is required")
        rep = harness.cmd_np(args.d, args.p, args.a, args.coeffs, args.prec, args.timings)
        for note in rep.notices:
            print(f"notice: {note}", file=err)
        if args.dump:
            Path(args.dump).write_text(json.dumps(harness.matrix_dumps(rep.data)) + "\n")
        _emit(rep.to_json(), out)
        return EXIT_FINDING if rep.findings else EXIT_OK
    if args.cmd == "scan":
        primes = [int(x) for x in args.p.split(",") if x.strip()]
        if args.jobs < 1:
            raise ValueError("--jobs must be positive")
        rows = harness.cmd_scan(args.d, primes, args.mode, args.seed, args.jobs, args.timings)
        if rows and rows[0].mode != "exhaustive":
            print("notice: sampled mode; observed polygons are an upper bound on GNP", file=err)
        if args.out == "csv":
            out.write(harness.scan_csv(rows))
        else:
            _emit({"d": args.d, "rows": [r.to_json() for r in rows]}, out)
        return EXIT_OK
    if args.cmd == "gnp":
        rep = harness.cmd_gnp(args.d, args.p)
        _emit(rep.to_json(), out)
        for note in rep.findings:
            print(f"finding: {note}", file=err)
        return EXIT_FINDING if rep.findings else EXIT_OK
    if args.cmd == "membership":
        _emit(harness.cmd_membership(args.d, args.r, args.coeffs, args.p, args.a), out)
        return EXIT_OK
    if args.cmd == "triangularize":
        if args.matrix:
            rep = harness.cmd_triangularize(matrix=_load_json_arg(args.matrix))
        else:
            if None in (args.d, args.p, args.coeffs):
                raise ValueError("give --matrix, or --d, --p and --coeffs")
            rep = harness.cmd_triangularize(d=args.d, p=args.p, a=args.a, coeffs=args.coeffs, prec=args.prec)
        _emit(rep, out)
        return EXIT_OK if rep["pass"] else EXIT_FINDING
    if args.cmd == "counterexample":
        rep = harness.cmd_counterexample(args.d, args.p, args.seed, args.prec)
        _emit(rep, out)
        ok = rep["np_is_slope_half_line"] and not rep["reduction_in_W_r"] and rep["trace_formula_match"]
        return EXIT_OK if ok else EXIT_FINDING
    if args.cmd == "curve":
        try:
            poly = Polygon.from_json(_load_json_arg(args.polygon))
        except (KeyError, TypeError, IndexError) as exc:
            raise ValueError(f"malformed polygon: {exc}") from None
        _emit(harness.cmd_curve(poly, args.p).to_json(), out)
        return EXIT_OK
    if args.cmd == "hodge":
        _emit(harness.cmd_hodge(args.d).to_json(), out)
        return EXIT_OK
    raise ValueError(f"unknown command {args.cmd}")


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return _run(args, out, err)
    except Finding as exc:
        print(f"finding: {exc}", file=err)
        return EXIT_FINDING
    except PrecisionError as exc:
        print(f"precision failure: {exc}", file=err)
        return EXIT_PRECISION
    except ResourceGuard as exc:
        print(f"resource guard: {exc}", file=err)
        return EXIT_GUARD
    except (ValueError, HypothesisError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
