from __future__ import annotations

import json

import pytest

from qmtree.cli import main
from qmtree.treespec import bundled_spec_path

SPEC = str(bundled_spec_path())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_vorobev_text(capsys):
    code, out, _ = run(capsys, "vorobev", "--exact")
    assert code == 0
    assert "consistent: True" in out and "infeasible" in out


def test_vorobev_json_is_stable(capsys):
    _, first, _ = run(capsys, "vorobev", "--alpha", "0.3", "--beta", "0.3", "--gamma", "0.3", "--exact", "--json")
    _, second, _ = run(capsys, "vorobev", "--alpha", "0.3", "--beta", "0.3", "--gamma", "0.3", "--exact", "--json")
    assert first == second
    body = json.loads(first)
    assert list(body) == [
        "params",
        "tables",
        "correlations",
        "consistent",
        "violations",
        "single_space_feasible",
        "witness",
        "certificate",
    ]
    assert body["consistent"] is False
    assert {tuple(v["values"]) for v in body["violations"]} == {("3/10", "7/10"), ("7/10", "3/10")}


def test_vorobev_scan(capsys):
    code, out, _ = run(capsys, "vorobev", "--scan", "--step", "0.1", "--json")
    assert code == 0
    assert json.loads(out)["consistent"] == [["1/2", "1/2", "1/2"]]


def test_vorobev_bad_param(capsys):
    code, _, err = run(capsys, "vorobev", "--alpha", "1.5")
    assert code == 1 and "outside" in err


def test_double_slit(capsys, tmp_path):
    code, out, _ = run(capsys, "double-slit", "--nx", "101", "--out", str(tmp_path))
    assert code == 0
    assert {p.name for p in tmp_path.iterdir()} == {"L.csv", "R.csv", "LR.csv", "tree.json", "violation.json"}
    report = json.loads((tmp_path / "violation.json").read_text())
    assert report["n_violation_cells"] > 0 and report["no_classical_mixture"]
    code, out, _ = run(capsys, "check", str(tmp_path / "tree.json"))
    assert code == 0 and "metaspace axioms: ok" in out


def test_double_slit_bad_params(capsys, tmp_path):
    code, _, _ = run(capsys, "double-slit", "--w", "2", "--out", str(tmp_path))
    assert code == 1


def test_check(capsys):
    code, out, _ = run(capsys, "check", SPEC, "--json")
    body = json.loads(out)
    assert code == 0
    assert body["variables"] == ["X", "Y", "Z"] and body["consistent"] and body["metaspace_axioms"]


def test_check_invalid(capsys, tmp_path):
    data = json.loads(bundled_spec_path().read_text())
    data["q"] = {"XY": 0.3, "XZ": 0.3, "YZ": 0.3}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data, indent=2))
    code, _, err = run(capsys, "check", str(bad))
    assert code == 1 and "q not on simplex" in err


def test_check_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "check", str(tmp_path / "nope.json"))
    assert code == 1


def test_sample(capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = run(capsys, "sample", SPEC, "--n", "20000", "--seed", "3", "--report", str(report))
    assert code == 0 and "PASS" in out
    body = json.loads(report.read_text())
    assert body["run"]["n"] == 20000 and body["comparison"]["passed"]


def test_sample_statistical_failure(capsys):
    code, out, _ = run(capsys, "sample", SPEC, "--n", "20000", "--seed", "3", "--z", "0.01")
    assert code == 2 and "FAIL" in out


def test_sample_bad_n(capsys):
    code, _, _ = run(capsys, "sample", SPEC, "--n", "0")
    assert code == 1


def test_requires_command():
    with pytest.raises(SystemExit):
        main([])
