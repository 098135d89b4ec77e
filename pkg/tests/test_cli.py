import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from bellscope.cli import main

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return path


def test_classify_all_outside(capsys):
    code, report = run(capsys, "classify", SAMPLES / "bell_violating.json", "--family", "all")
    assert code == 3
    m = report["results"]["membership"]
    assert m["classical"]["inside"] is False
    assert m["general"]["inside"] is True
    assert m["classical"]["certificate"]["facet"]["id"] == "p1+p2-p12<=1"
    assert set(report) == {"command", "input_digest", "mode", "results", "seed", "version"}


def test_classify_inside(capsys):
    code, report = run(capsys, "classify", SAMPLES / "correlated_inside.json")
    assert code == 0
    coeffs = report["results"]["membership"]["classical"]["coefficients"]
    assert coeffs == {"(0,0;0)": "2/5", "(0,1;0)": "1/5", "(1,0;0)": "1/5", "(1,1;1)": "1/5"}


def test_classify_empty_file(capsys, tmp_path):
    code, report = run(capsys, "classify", write(tmp_path, "e.json", ""))
    assert code == 2 and report is None


def test_classify_missing_file(capsys, tmp_path):
    assert run(capsys, "classify", tmp_path / "nope.json")[0] == 2


def test_classify_unsupported_facets(capsys, tmp_path):
    path = write(tmp_path, "n3.json", {"n": 3, "S": [[1, 2]], "singles": ["1/2"] * 3, "pairs": {"1,2": "1/4"}})
    code, report = run(capsys, "classify", path)
    assert code == 0
    assert report["results"]["facets"] is None
    assert "skipped" in report["results"]["notice"]


def test_represent(capsys):
    code, report = run(capsys, "represent", SAMPLES / "bell_violating.json", "--kind", "conditional")
    assert code == 0 and report["results"]["verification"]["agree"]
    code, report = run(capsys, "represent", SAMPLES / "bell_violating.json", "--kind", "kolmogorov")
    assert code == 3 and report["results"]["error"] == "outside-polytope"
    code, report = run(capsys, "represent", SAMPLES / "certain.json")
    assert code == 0 and len(report["results"]["space"]["atoms"]) == 1


def test_represent_inadmissible(capsys, tmp_path):
    path = write(tmp_path, "bad.json", {"n": 2, "S": [[1, 2]], "singles": ["1", "1"], "pairs": {"1,2": "0"}})
    code, report = run(capsys, "represent", path, "--kind", "conditional")
    assert code == 3 and report["results"]["error"] == "inadmissible"


def test_explain_property(capsys):
    code, report = run(capsys, "explain", SAMPLES / "correlated_inside.json")
    assert code == 0
    res = report["results"]
    assert res["explanation"]["screening"]["passed"]
    assert res["extracted"]["agree"]
    assert res["extracted"]["recovered"]["singles"] == ["2/5", "2/5"]


def test_explain_propensity(capsys):
    code, report = run(
        capsys, "explain", SAMPLES / "correlated_inside.json", "--kind", "propensity",
        "--components", SAMPLES / "propensity_components.json", "--mode", "float",
    )
    assert code == 0
    assert report["results"]["explanation"]["kind"] == "propensity"
    assert report["results"]["explanation"]["screening"]["passed"]


def test_explain_propensity_needs_components(capsys):
    assert run(capsys, "explain", SAMPLES / "correlated_inside.json", "--kind", "propensity")[0] == 2


def test_explain_epr_vector_outside(capsys):
    code, report = run(capsys, "explain", SAMPLES / "epr_canonical.json", "--mode", "float")
    assert code == 3 and report["results"]["error"] == "outside-polytope"


def test_epr_canonical(capsys):
    code, report = run(capsys, "epr", "--canonical")
    assert code == 0 and report["mode"] == "float"
    res = report["results"]
    assert res["clauser_horne"]["closed_form"] == pytest.approx(-1.207107, abs=1e-6)
    assert res["membership"]["classical"]["inside"] is False
    assert res["membership"]["quantum"]["inside"] is True


def test_epr_equal_directions(capsys):
    code, report = run(capsys, "epr", "--angles", "0,0,1," * 3 + "0,0,1")
    assert code == 0
    assert all(float(v) in (0.0, 0.5) for v in report["results"]["vector"]["pairs"].values())
    assert report["results"]["membership"]["classical"]["inside"]


def test_epr_non_unit(capsys):
    assert run(capsys, "epr", "--angles", "0,0,1,0,0,1,0,0,1,0,0,2")[0] == 2
    assert run(capsys, "epr", "--angles", "1,2,3")[0] == 2


def test_bell_operator_default(capsys):
    code, report = run(capsys, "bell-operator")
    assert report["results"]["values"]["singlet"] == pytest.approx(math.sqrt(2))
    assert report["seed"] is None


def test_bell_operator_files(capsys, tmp_path):
    one = [[[1.0 if r == c else 0.0, 0.0] for c in range(4)] for r in range(4)]
    ops = write(tmp_path, "ops.json", {"A1": one, "A2": one, "B1": one, "B2": one})
    states = write(tmp_path, "states.json", {"states": [{"vector": [1, 0, 0, 0]}]})
    code, report = run(capsys, "bell-operator", "--operators", ops, "--states", states)
    assert code == 0
    assert report["results"]["values"] == {"state[0]": pytest.approx(1.0)}
    bad = write(tmp_path, "bad.json", {"A1": one})
    assert run(capsys, "bell-operator", "--operators", bad)[0] == 2


def test_seed_env_and_determinism(capsys, monkeypatch):
    _, first = run(capsys, "bell-operator", "--random-pure", "5", "--seed", "7")
    monkeypatch.setenv("BELLSCOPE_SEED", "7")
    _, second = run(capsys, "bell-operator", "--random-pure", "5")
    assert first["seed"] == second["seed"] == 7
    assert first["results"] == second["results"]
    assert max(abs(v) for v in first["results"]["values"].values()) <= math.sqrt(2) + 1e-9


def test_reports_byte_identical():
    cmd = [sys.executable, "-m", "bellscope.cli", "classify", str(SAMPLES / "bell_violating.json"), "--family", "all"]
    a = subprocess.run(cmd, capture_output=True)
    b = subprocess.run(cmd, capture_output=True)
    assert a.returncode == b.returncode == 3
    assert a.stdout == b.stdout and a.stdout


def test_out_flag(capsys, tmp_path):
    target = tmp_path / "report.json"
    code = main(["classify", str(SAMPLES / "correlated_inside.json"), "--out", str(target)])
    assert code == 0
    assert capsys.readouterr().out == ""
    assert json.loads(target.read_text())["results"]["membership"]["classical"]["inside"]


def test_usage_error(capsys):
    assert main(["classify"]) == 2
    assert main(["nonsense"]) == 2
