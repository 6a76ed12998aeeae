import csv
import json

import pytest

from ordloc.calibrate import Calibration
from ordloc.cli import main
from ordloc.family import exponential_family
from ordloc.loss import make_loss
from ordloc.risklab import SweepConfig, risk_sweep


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_calibrate_json(capsys):
    code, out, _ = run(capsys, "calibrate", "--family", "exponential", "--sigma", "2", "--loss",
                       "absolute", "--u", "0.5,1")
    doc = json.loads(out)
    assert code == 0
    lib = Calibration(exponential_family(2.0), make_loss("absolute")).summary([0.5, 1.0])
    assert doc == json.loads(json.dumps(lib))


def test_calibrate_undefined_constant_is_numeric_failure(capsys):
    code, out, _ = run(capsys, "calibrate", "--family", "exponential", "--loss", "linex", "--linex-a", "2")
    assert code == 2 and json.loads(out)["c0"] is None


def test_estimate_json(capsys):
    code, out, _ = run(capsys, "estimate", "--family", "exponential", "--sigma", str(322 / 30),
                       "--x1", "43.93", "--x2", "42.66", "--all", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and len(doc["estimates"]) == 7
    assert round(doc["estimates"]["natural"]["value"], 2) == 33.2


def test_risk_sweep_matches_library_bytes(capsys, tmp_path):
    out = tmp_path / "r.csv"
    code, _, _ = run(capsys, "risk-sweep", "--family", "exponential", "--loss", "squared", "--theta",
                     "0:1:0.5", "--reps", "3000", "--estimators", "natural,st,bz", "--out", str(out))
    assert code == 0
    lib = risk_sweep(SweepConfig([0, 0.5, 1], exponential_family(1.0), make_loss("squared"),
                                 ["natural", "stein", "brewster_zidek"], reps=3000, seed=42))
    assert out.read_text() == lib.to_csv()


def test_gpn_sweep_csv(capsys):
    code, out, _ = run(capsys, "gpn-sweep", "--family", "exponential", "--est1", "pn_m0", "--est2", "pn",
                       "--theta", "0,2", "--reps", "2000")
    rows = list(csv.reader(out.splitlines()))
    assert code == 0 and rows[0] == ["theta", "gpn", "tie_fraction", "se", "reps", "seed"]
    assert len(rows) == 3


def test_ingest_bundled(capsys, tmp_path):
    side = tmp_path / "side.json"
    code, out, _ = run(capsys, "ingest", "--json-out", str(side))
    assert code == 0
    assert "45.65" in out and "39.58" in out
    doc = json.loads(side.read_text())
    assert doc["sigma_eff"] == pytest.approx(322 / 30)


def test_ingest_bad_file_is_usage_error(capsys, tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    code, _, err = run(capsys, "ingest", "--data", str(p))
    assert code == 1 and "empty" in err


@pytest.mark.parametrize("argv", [
    ["estimate", "--x1", "1"],
    ["risk-sweep", "--loss", "linex"],
    ["risk-sweep", "--estimators", "nope"],
    ["risk-sweep", "--theta", "-1,0"],
    ["frobnicate"],
])
def test_usage_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as info:
        raise SystemExit(main(argv))
    assert info.value.code == 1


def test_sweep_calibration_failure_exit_2(capsys):
    code, _, err = run(capsys, "risk-sweep", "--family", "exponential", "--loss", "linex",
                       "--linex-a", "3", "--reps", "2000", "--theta", "0")
    assert code == 2 and "exponential" in err


def test_check_calibration_passes(capsys):
    code, out, _ = run(capsys, "check", "calibration")
    assert code == 0 and "[FAIL]" not in out


def test_check_failure_exit_3(capsys, monkeypatch):
    from ordloc import checks

    def broken():
        yield checks.CheckResult("deliberately broken", False, "1", "0")
    monkeypatch.setattr(checks, "calibration_suite", broken)
    code, out, _ = run(capsys, "check", "calibration")
    assert code == 3 and "deliberately broken" in out
