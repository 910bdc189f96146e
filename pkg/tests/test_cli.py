import csv
import json

import pytest

from ctype_fhc.cli import density_csv, norm_csv, run
from ctype_fhc.sets import prefix_density

Y = [{"i": 0, "m": "1", "e": 0}, {"i": 5, "m": "-1", "e": -1}]


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def _load(path):
    return json.loads(path.read_text())


def test_verify_quick_passes(tmp_path):
    out = tmp_path / "r.json"
    assert run(["verify", "all", "--spec", "canonical", "--level", "quick", "--samples", "20",
                "--out", str(out)]) == 0
    rep = _load(out)
    assert rep["passed"] and rep["command"] == "verify all"
    assert rep["config"]["spec"] == "canonical"
    assert all(c["passed"] and c["statement"] for c in rep["checks"])
    assert "timings" not in rep


def test_reports_are_byte_identical(tmp_path, monkeypatch):
    args = ["verify", "all", "--spec", "toy", "--samples", "10", "--seed", "7"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv("CTYPE_THREADS", "1")
    assert run(args + ["--out", str(a)]) == 0
    monkeypatch.setenv("CTYPE_THREADS", "3")
    assert run(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_errors(tmp_path, capsys):
    assert run(["verify", "all", "--spec", "canonical", "--bogus"]) == 2
    assert run(["verify", "all", "--spec", str(tmp_path / "missing.json")]) == 2
    bad = _write(tmp_path / "bad.json", {"kind": "geometric", "beta": 3, "K_max": 2})
    assert run(["schedule", "validate", "--spec", bad]) in (1, 2)
    assert run(["op", "apply", "--spec", "canonical", "--vec", _write(tmp_path / "v.json", "oops")]) == 2


def test_schedule_validate(tmp_path):
    out = tmp_path / "s.json"
    spec = _write(tmp_path / "spec.json", {"kind": "geometric", "beta": 8, "K_max": 2})
    assert run(["schedule", "validate", "--spec", spec, "--out", str(out)]) == 0
    assert _load(out)["passed"]


def test_op_apply(tmp_path, capsys):
    vec = _write(tmp_path / "v.json", [{"i": 0, "m": "1", "e": 0}])
    assert run(["op", "apply", "--spec", "canonical", "--vec", vec, "--power", "3"]) == 0
    assert json.loads(capsys.readouterr().out) == [{"i": 3, "m": "1", "e": -1}]
    assert run(["op", "apply", "--spec", "canonical", "--vec", vec, "--power", "-1", "--method", "step"]) == 0
    assert json.loads(capsys.readouterr().out) == [{"i": 7, "m": "-1", "e": 0}]


def test_sets_gen(tmp_path):
    out = tmp_path / "f.json"
    assert run(["sets", "gen", "--pairs", "[[3, 5], [7, 2]]", "--horizon", "5000", "--out", str(out)]) == 0
    rep = _load(out)
    assert rep["passed"]


def test_tau_synth(tmp_path):
    out = tmp_path / "t.json"
    assert run(["tau", "synth", "--spec", "canonical", "-L", "2", "--out", str(out)]) == 0
    assert _load(out)["results"]["tau"] == [151, 2609, 40488]
    assert run(["tau", "synth", "--spec", "canonical", "-L", "9"]) == 3


def test_fhc_round_trip_and_corruption(tmp_path):
    target = _write(tmp_path / "y.json", Y)
    built = tmp_path / "b.json"
    assert run(["fhc", "build", "--spec", "toy", "--target", target, "--out", str(built)]) == 0
    rep = _load(built)
    assert rep["passed"]
    ok = tmp_path / "ok.json"
    assert run(["fhc", "check", "--spec", "toy", "--plan", str(built), "--out", str(ok)]) == 0
    assert all(v["passed"] for v in _load(ok)["results"]["visits"])
    rep["results"]["plan"]["targets"][0]["N"] = 1
    corrupted = _write(tmp_path / "bad.json", rep)
    out = tmp_path / "c.json"
    assert run(["fhc", "check", "--spec", "toy", "--plan", corrupted, "--out", str(out)]) == 1
    failed = [c for c in _load(out)["checks"] if not c["passed"]]
    assert failed
    witness = failed[0]["details"]
    assert isinstance(witness["M"], int) and set(witness["distance"]) == {"m", "e"}


def test_fhc_on_canonical_is_out_of_reach():
    assert run(["fhc", "build", "--spec", "canonical"]) == 3


def test_fhc_density_csv(tmp_path):
    target = _write(tmp_path / "y.json", Y)
    path = tmp_path / "d.csv"
    assert run(["fhc", "density", "--spec", "toy", "--target", target, "--csv", str(path),
                "--out", str(tmp_path / "d.json")]) == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["N", "count", "density", "density_decimal_approx"]
    assert rows[1][:3] == ["1", "0", "0/1"]


def test_inverse_profile_csv(tmp_path):
    vec = _write(tmp_path / "v.json", [{"i": 8, "m": "1", "e": 0}])
    path, out = tmp_path / "n.csv", tmp_path / "p.json"
    assert run(["inv", "profile", "--spec", "canonical", "--vec", vec, "--horizon", "300", "--csv", str(path),
                "--out", str(out)]) == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["j", "norm_mantissa", "norm_exponent", "norm_decimal_approx"]
    assert len(rows) == 301 and rows[1][:3] == ["0", "1", "0"]
    res = _load(out)["results"]
    assert res["l0"] == 1 and res["count"] == 295
    grow = tmp_path / "g.json"
    assert run(["inv", "profile", "--spec", "canonical", "--block", "0", "--horizon", "200", "--out", str(grow)]) == 0
    assert _load(grow)["passed"]


def test_curve_csv_writers():
    rows = list(csv.reader(density_csv(prefix_density(range(0, 20, 2), 20)).splitlines()))
    assert rows[2][:3] == ["2", "1", "1/2"]
    empty = list(csv.reader(density_csv(prefix_density([], 0)).splitlines()))
    assert empty == [["N", "count", "density", "density_decimal_approx"]]
    assert list(csv.reader(norm_csv([]).splitlines())) == [["j", "norm_mantissa", "norm_exponent",
                                                            "norm_decimal_approx"]]


def test_version_flag(capsys):
    assert run(["--version"]) == 0
    assert capsys.readouterr().out.strip() == "0.1.0"
