import csv
import json
import math

import pytest

from twoweight.cli import main
from twoweight.instances import InstanceSpec, generate_instance
from twoweight.report import CSV_COLUMNS, SECTIONS, VerifyOptions, run_fuzz, run_verify


def strip_timing(obj):
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k != "timing"}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


@pytest.fixture
def worked_file(tmp_path, worked):
    path = tmp_path / "worked.json"
    worked.save(path)
    return path


def test_verify_worked_instance(worked):
    rep = run_verify(worked, [2.0])
    sw = rep["sandwich"]["2.0"]
    assert sw["c2"] == pytest.approx(2.96332, abs=1e-5)
    assert sw["c1_exact_p2"] == pytest.approx(3.0202, abs=1e-3)
    assert rep["pass"] == {**{s: True for s in SECTIONS}, "all": True}
    assert set(rep["timing"]) == set(SECTIONS)


def test_zero_alpha_instance_passes():
    inst = generate_instance(InstanceSpec(depth=3, seed=0))
    inst.alpha[:] = 0.0
    rep = run_verify(inst, [1.5, 2.0, 3.0])
    assert rep["pass"]["all"]
    for key in ("1.5", "2.0", "3.0"):
        sw = rep["sandwich"][key]
        assert sw["c2"] == 0.0 and sw["c1_lower"] == 0.0
        cert = rep["certificate"][key]
        assert cert["f_half"]["testing_constant"] == cert["g_half"]["testing_constant"] == 0.0
        assert cert["assembly"]["lhs"] == 0.0 and cert["pass"]


def test_split_halves_assemble(worked):
    cert = run_verify(worked, [2.0])["certificate"]["2.0"]
    # the splitting inequality holds only at {a}
    assert cert["f_half"]["cubes"] == ["1:0"]
    assert cert["g_half"]["cubes"] == ["0:0", "1:1"]
    # f-half: alpha {a} = 1 scaled to testing constant 1; its sum is 1*2*3 = 6
    assert cert["f_half"]["trace"]["totals"]["lhs"] * cert["f_half"]["testing_constant"] == pytest.approx(6.0)
    assert cert["assembly"]["lhs"] == pytest.approx(22.0, rel=1e-14)
    assert cert["assembly"]["holds"] and cert["pass"]


def test_cli_verify_happy_path(tmp_path, worked_file, capsys):
    out = tmp_path / "rep.json"
    assert main(["verify", "--in", str(worked_file), "--p", "2", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["pass"]["all"] is True
    assert "c2=2.96332" in capsys.readouterr().out


def test_cli_multiple_exponents(tmp_path, worked_file):
    out = tmp_path / "rep.json"
    assert main(["verify", "--in", str(worked_file), "--p", "1.5,3", "--p", "2", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["p"] == [1.5, 3.0, 2.0]


def test_cli_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", "--in", str(bad)]) == 2
    assert "malformed instance" in capsys.readouterr().err


def test_cli_missing_file(tmp_path):
    assert main(["verify", "--in", str(tmp_path / "nope.json")]) == 2


def test_cli_bad_exponent(worked_file):
    assert main(["verify", "--in", str(worked_file), "--p", "1"]) == 2


def test_cli_unknown_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--frobnicate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_cli_failure_exit_code(tmp_path, worked_file):
    # an atom cap of 1 makes the p=2 dense norm refuse the instance
    assert main(["verify", "--in", str(worked_file), "--cap", "1"]) == 0
    bad = tmp_path / "neg.json"
    doc = json.loads(worked_file.read_text())
    doc["alpha"]["0:0"] = -1.0
    bad.write_text(json.dumps(doc))
    assert main(["verify", "--in", str(bad)]) == 2


def test_cli_corona_and_norm(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert main(["corona", "--depth", "4", "--seed", "3", "--function-model", "power-law", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["properties"]["carleson_constant"] <= 2 + 1e-9
    assert main(["norm", "--depth", "3", "--seed", "1", "--p", "1.5,2,3"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.startswith("p=")]
    assert len(lines) == 3


def test_cli_fuzz_csv(tmp_path):
    assert main(["fuzz", "--count", "40", "--depth", "4", "--seed", "7", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "fuzz.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 40
    assert tuple(rows[0]) == CSV_COLUMNS
    assert all(r["pass"] == "True" for r in rows)
    rep = json.loads((tmp_path / "fuzz_report.json").read_text())
    assert rep["pass"] and rep["count"] == 40


def test_reports_are_deterministic(tmp_path, worked_file):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["verify", "--in", str(worked_file), "--p", "1.5,2,3", "--restarts", "4"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert strip_timing(json.loads(a.read_text())) == strip_timing(json.loads(b.read_text()))


def test_parallel_matches_sequential():
    opts = VerifyOptions(restarts=2)
    seq = run_fuzz(24, 4, 11, [1.5, 2.0], opts, jobs=1)
    par = run_fuzz(24, 4, 11, [1.5, 2.0], opts, jobs=3)
    assert strip_timing(seq) == strip_timing(par)


def test_fuzz_prefix_stability():
    # instance i depends on (master seed, i) only
    small = run_fuzz(5, 3, 2, [2.0], VerifyOptions(restarts=1))
    big = run_fuzz(9, 3, 2, [2.0], VerifyOptions(restarts=1))
    assert strip_timing(small["instances"]) == strip_timing(big["instances"][:5])


def test_ratio_column(worked):
    rep = run_fuzz(6, 3, 0, [2.0], VerifyOptions(restarts=1))
    for inst in rep["instances"]:
        row = inst["rows"][0]
        if row["c2"] > 0:
            assert row["ratio"] == pytest.approx(row["c1_exact_p2"] / row["c2"], rel=1e-15)
            assert 1 - 1e-9 <= row["ratio"] <= 43.3137
        assert not math.isnan(row["c2"])
