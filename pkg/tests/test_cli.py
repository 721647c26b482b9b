import csv
import io
import json
from fractions import Fraction as Fr

import pytest

from expsum import cli, harness
from expsum.errors import PrecisionError
from expsum.polygon import Polygon


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def run_json(*argv):
    code, out, err = run(*argv)
    return code, json.loads(out) if out.strip() else None, err


def slopes(poly_json):
    return [Fr(s) for s in poly_json["slopes"]]


def test_np_ordinary_cubic():
    code, rep, _ = run_json("np", "--d", "3", "--p", "7", "--coeffs", "0,1,0")
    assert code == 0
    assert rep["flags"]["trace_formula_match"] is True
    assert rep["flags"]["np_eq_hp"] is True
    assert rep["flags"]["np_eq_gnp"] is True
    assert rep["flags"]["delta_gt_m_eta"] is True
    assert rep["input"]["precision"]["retries"] == 0
    assert "timings_ms" not in rep


def test_np_supersingular_cubic():
    code, rep, _ = run_json("np", "--d", "3", "--p", "5", "--coeffs", "0,0,0")
    assert code == 0
    assert slopes(rep["oracle_polygon"]) == [Fr(1, 2)] * 2
    assert rep["oracle_polygon"] == rep["dwork_polygon"]


def test_np_over_extension():
    code, rep, _ = run_json("np", "--d", "4", "--p", "5", "--a", "2", "--coeffs", "0,y,2,1+y")
    assert code == 0 and rep["flags"]["trace_formula_match"]
    assert rep["input"]["embedding"]["unram_poly"]


@pytest.mark.parametrize("argv", [
    ["np", "--d", "3", "--p", "6", "--coeffs", "0,1,0"],
    ["np", "--d", "3", "--p", "2", "--coeffs", "0,1,0"],
    ["np", "--d", "3", "--p", "3", "--coeffs", "0,1,0"],
    ["np", "--d", "3", "--p", "7", "--coeffs", "0,1"],
    ["np", "--d", "3", "--p", "7"],
    ["np", "--d", "3", "--p", "7", "--coeffs", "0,1,0", "--out", "csv"],
    ["np", "--d", "3"],
    ["scan", "--d", "3", "--p", "5", "--mode", "bogus"],
    ["membership", "--d", "4", "--r", "2", "--coeffs", "1,2,3"],
    ["curve", "--polygon", "{\"vertices\": [[0, \"0\"], [2, \"1\"]]}", "--p", "2"],
    ["curve", "--polygon", "{not json", "--p", "5"],
    ["triangularize", "--matrix", "{\"p\": 7}"],
    ["counterexample", "--d", "3", "--p", "7"],
])
def test_bad_input_exits_2(argv):
    with pytest.raises(SystemExit) as exc:
        code, _, _ = run(*argv)
        raise SystemExit(code)
    assert exc.value.code == 2


def test_constant_term_notice():
    code, rep, err = run_json("np", "--d", "3", "--p", "7", "--coeffs", "4,1,0")
    assert code == 0
    assert "notice: constant term" in err
    assert rep["input"]["coeffs"][0] == [0]


def test_output_is_deterministic():
    a = run("np", "--d", "4", "--p", "5", "--coeffs", "0,1,2,3")
    b = run("np", "--d", "4", "--p", "5", "--coeffs", "0,1,2,3")
    assert a == b
    c = run("scan", "--d", "3", "--p", "5,7", "--mode", "sample:6", "--seed", "3")
    d = run("scan", "--d", "3", "--p", "5,7", "--mode", "sample:6", "--seed", "3")
    assert c == d


def test_timings_flag():
    _, rep, _ = run_json("np", "--d", "3", "--p", "7", "--coeffs", "0,1,0", "--timings")
    assert set(rep["timings_ms"]) == {"oracle", "dwork"}


def test_scan_csv_and_jobs():
    code, out, _ = run("scan", "--d", "3", "--p", "5,7,11")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == harness.CSV_COLUMNS
    by_p = {int(r["p"]): r for r in rows}
    assert by_p[5]["obs_slopes"] == "1/2 1/2" and by_p[5]["eq_obs_gnp"] == "True"
    assert by_p[7]["eq_obs_hp"] == "True"
    assert by_p[11]["obs_slopes"] == "2/5 3/5" and by_p[11]["eq_obs_gnp"] == "True"
    assert by_p[11]["runtime_ms"] == ""
    code2, out2, _ = run("scan", "--d", "3", "--p", "5,7,11", "--jobs", "2")
    assert code2 == 0 and out2 == out


def test_scan_sample_mode_is_labelled():
    code, rep, err = run_json("scan", "--d", "4", "--p", "7", "--mode", "sample:20", "--out", "json")
    assert code == 0
    assert "upper bound" in err
    row = rep["rows"][0]
    assert row["mode"] == "sample" and row["observed_role"] == "upper bound on GNP"
    assert row["total"] == 20


def test_scan_guard_exits_3():
    code, _, err = run("scan", "--d", "3", "--p", "1031")
    assert code == 3 and "resource guard" in err


def test_gnp_command():
    code, rep, _ = run_json("gnp", "--d", "3", "--p", "11")
    assert code == 0
    assert slopes(rep["polygon"])[0] == Fr(2, 5)
    assert rep["per_n"][0]["epsilon_n"] == "1/15"
    code, rep, err = run_json("gnp", "--d", "3", "--p", "5")
    assert code == 5 and rep["findings"] and "finding" in err


def test_membership_command():
    code, rep, _ = run_json("membership", "--d", "3", "--r", "2", "--coeffs", "1,1")
    assert code == 0 and rep["in_W"] and rep["field"] == "Q"
    code, rep, _ = run_json("membership", "--d", "3", "--r", "2", "--coeffs", "0,0")
    assert code == 0 and not rep["in_X"] and [1, 1] in rep["vanishing_psi_factors"]
    code, rep, _ = run_json("membership", "--d", "3", "--r", "2", "--coeffs", "3,5", "--p", "17")
    assert code == 0 and rep["field"] == "F_17^1"
    code, _, _ = run("membership", "--d", "3", "--r", "2", "--coeffs", "1,1", "--p", "13")
    assert code == 2


def test_triangularize_dump_round_trip(tmp_path):
    path = tmp_path / "m.json"
    code, _, _ = run("np", "--d", "3", "--p", "13", "--coeffs", "0,1,2", "--dump", str(path))
    assert code == 0
    dumps = json.loads(path.read_text())
    assert set(dumps) == {"F", "Fdagger"}
    code, rep, _ = run_json("triangularize", "--matrix", str(path))
    assert code == 0 and rep["pass"] and rep["source"] == "matrix dump"
    code2, rep2, _ = run_json("triangularize", "--d", "3", "--p", "13", "--coeffs", "0,1,2")
    assert code2 == 0
    assert rep2["diagonal_valuations"] == rep["diagonal_valuations"]
    assert all(rep2["flags"].values())


def test_counterexample_command():
    code, rep, _ = run_json("counterexample", "--d", "3", "--p", "5")
    assert code == 0
    assert rep["np_is_slope_half_line"] and not rep["reduction_in_W_r"]
    assert rep["lift_in_W_r_over_Q"] and rep["trace_formula_match"]
    code, rep, _ = run_json("counterexample", "--d", "4", "--p", "7")
    assert code == 0 and slopes(rep["oracle_polygon"]) == [Fr(1, 2)] * 3


def test_curve_command():
    code, rep, _ = run_json("hodge", "--d", "3")
    code, out, _ = run_json("curve", "--polygon", json.dumps(rep), "--p", "5")
    assert code == 0 and Polygon.from_json(out).endpoint == (8, 4)
    _, np_rep, _ = run_json("np", "--d", "3", "--p", "7", "--coeffs", "0,1,0")
    _, out, _ = run_json("curve", "--polygon", json.dumps(np_rep["oracle_polygon"]), "--p", "7")
    assert slopes(out) == [Fr(1, 3)] * 6 + [Fr(2, 3)] * 6


def test_hodge_command():
    code, rep, _ = run_json("hodge", "--d", "4")
    assert code == 0 and rep["vertices"][-1] == [3, "3/2"]


def test_precision_retry(monkeypatch):
    real = harness.FrobeniusData
    calls = []

    def flaky(*args, **kwargs):
        calls.append(kwargs.get("N"))
        if len(calls) == 1:
            raise PrecisionError("forced")
        return real(*args, **kwargs)

    monkeypatch.setattr(harness, "FrobeniusData", flaky)
    code, rep, _ = run_json("np", "--d", "3", "--p", "7", "--coeffs", "0,1,0", "--prec", "4")
    assert code == 0
    assert rep["input"]["precision"]["retries"] == 1 and rep["input"]["precision"]["N"] == 8
    assert calls[:2] == [4, 8]


def test_precision_exhausted_exits_4(monkeypatch):
    def broken(*args, **kwargs):
        raise PrecisionError("forced")

    monkeypatch.setattr(harness, "FrobeniusData", broken)
    code, _, err = run("np", "--d", "3", "--p", "7", "--coeffs", "0,1,0")
    assert code == 4 and "precision" in err
