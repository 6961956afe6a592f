import csv
import json
import subprocess
import sys

import pytest

from gevrey_bnf.cli import main
from gevrey_bnf.problems import bundled_path, pendulum_problem, write_json


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def pendulum_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("pend")
    assert run("compute", bundled_path("pendulum.json"), "-M", 6, "--out", out) == 0
    return out


def test_compute_outputs(pendulum_out):
    doc = json.loads((pendulum_out / "result.json").read_text())
    assert doc["format"] == "gevrey-bnf-result" and doc["order"] == 6
    summary = (pendulum_out / "summary.txt").read_text()
    assert "2\t[2]\t0.5" in summary
    assert "3\t[3]\t-0.0625" in summary


def test_diagnose_outputs(pendulum_out, tmp_path):
    assert run("diagnose", pendulum_out / "result.json", "--out", tmp_path) == 0
    consts = json.loads((tmp_path / "constants.json").read_text())
    assert consts["fit"]["violations"] == 0
    assert consts["params"]["mu"] == 3.0
    rows = list(csv.DictReader((tmp_path / "profiles.csv").open()))
    assert {r["kind"] for r in rows} == {"g", "B"}
    assert json.loads((tmp_path / "inequalities.json").read_text())["envelope"]["passed"]
    assert (tmp_path / "truncation.csv").read_text().startswith("I,m_star")


def test_verify_outputs(pendulum_out, tmp_path, capsys):
    code = run("verify", bundled_path("pendulum.json"), pendulum_out / "result.json",
               "--out", tmp_path, "--samples", 16, "--horizon", 50, "--escape-radii", 0.1, 0.6)
    assert code == 0
    assert "flatness slope" in capsys.readouterr().out
    lines = (tmp_path / "escape.csv").read_text().splitlines()
    assert len(lines) == 2  # 0.6 lies outside the domain and is skipped
    assert len((tmp_path / "flatness.csv").read_text().splitlines()) == 9


def test_integrable_pipeline(tmp_path):
    assert run("compute", bundled_path("integrable.json"), "-M", 4, "--out", tmp_path) == 0
    assert "(empty" in (tmp_path / "summary.txt").read_text()
    assert run("diagnose", tmp_path / "result.json", "--out", tmp_path) == 0
    fit = json.loads((tmp_path / "constants.json").read_text())["fit"]
    assert fit["vacuous"] and fit["C1"] == 1.0 and fit["C2"] == 1.0
    assert run("verify", bundled_path("integrable.json"), tmp_path / "result.json", "--out", tmp_path,
               "--samples", 4, "--horizon", 10, "--escape-radii", 0.05) == 0


def test_resonant_exit_code(tmp_path):
    p = tmp_path / "res.json"
    write_json(p, {"dim": 2, "omega": [1.0, 0.5], "terms": []})
    assert run("compute", p, "--out", tmp_path) == 3


def test_data_errors(tmp_path, pendulum_out):
    p = tmp_path / "bad.json"
    p.write_text('{"dim": 1}')
    assert run("compute", p, "--out", tmp_path) == 2
    broken = tmp_path / "broken.json"
    doc = json.loads((pendulum_out / "result.json").read_text())
    del doc["g"]
    broken.write_text(json.dumps(doc))
    assert run("diagnose", broken, "--out", tmp_path) == 2
    assert run("verify", bundled_path("pendulum.json"), broken, "--out", tmp_path) == 2


def test_diagnose_needs_B(tmp_path):
    assert run("compute", bundled_path("pendulum.json"), "-M", 9, "--out", tmp_path) == 0
    assert run("diagnose", tmp_path / "result.json", "--out", tmp_path) == 2


def test_verify_rejects_other_problem(pendulum_out, tmp_path):
    p = tmp_path / "other.json"
    write_json(p, pendulum_problem(omega0=2.0))
    assert run("verify", p, pendulum_out / "result.json", "--out", tmp_path) == 2


def test_slope_exit_code(tmp_path):
    # dropping g_3 from an order-3 result leaves an O(r^3) residual, one order short
    assert run("compute", bundled_path("pendulum.json"), "-M", 3, "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "result.json").read_text())
    for part in doc["g"]["parts"]:
        if part["m"] == 3:
            part["terms"] = []
    (tmp_path / "result.json").write_text(json.dumps(doc))
    code = run("verify", bundled_path("pendulum.json"), tmp_path / "result.json", "--out", tmp_path,
               "--samples", 8, "--escape-radii")
    assert code == 4


def test_checks(tmp_path):
    out = tmp_path / "checks.json"
    assert run("checks", "--suite", "gamma", "--out", out) == 0
    assert json.loads(out.read_text())["passed"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gevrey_bnf", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
