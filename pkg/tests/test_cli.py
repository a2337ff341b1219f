import json
import subprocess
import sys
from pathlib import Path

import pytest

from poissonjet.cli import main
from poissonjet.report import validate

MODELS = Path(__file__).resolve().parent.parent / "docs" / "models"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("group,action,name,code", [
    ("check", "poisson", "so3.json", 0),
    ("jet", "check", "nonholonomic.json", 0),
    ("jet", "compute", "nonholonomic.json", 0),
    ("algebroid", "from-jet", "nonholonomic.json", 0),
    ("algebroid", "check", "rotation-action.json", 0),
    ("coupling", "check", "ginzburg.json", 0),
    ("codim1", "check", "florian.json", 1),
    ("model", "build", "deformation.json", 0),
    ("model", "verify", "codim1-U0.json", 0),
    ("homotopy", "primitive", "homotopy.json", 0),
    ("groupoid", "check", "counterexample-groupoid.json", 0),
])
def test_commands_on_sample_documents(group, action, name, code, capsys, tmp_path):
    out = tmp_path / "r.json"
    got, stdout, _ = run([group, action, str(MODELS / name), "--json", str(out)], capsys)
    assert got == code
    report = json.loads(out.read_text())
    validate(report)
    assert report["verdict"] == ("PASS" if code == 0 else "FAIL")
    assert f"verdict: {report['verdict']}" in stdout


def test_florian_report_carries_residual(capsys):
    code, out, _ = run(["codim1", "check", str(MODELS / "florian.json"), "--json", "-"], capsys)
    assert code == 1
    report = json.loads(out)
    (s2,) = [c for c in report["checks"] if c["name"] == "S2''"]
    assert "S2'' i_(pi#dz) dtheta dx: 2*x" in s2["residuals"]


def test_json_output_is_byte_identical(tmp_path, capsys):
    out = tmp_path / "r.json"
    argv = ["groupoid", "check", str(MODELS / "counterexample-groupoid.json"), "--seed", "3", "--json", str(out)]
    assert main(argv) == 0
    first = out.read_bytes()
    assert main(argv) == 0
    assert out.read_bytes() == first
    capsys.readouterr()


def test_flags_before_or_after_subcommand(capsys):
    a = run(["--seed", "2", "--json", "-", "check", "poisson", str(MODELS / "so3.json")], capsys)[1]
    b = run(["check", "poisson", str(MODELS / "so3.json"), "--seed", "2", "--json", "-"], capsys)[1]
    assert json.loads(a)["seed"] == 2
    assert json.loads(a)["checks"] == json.loads(b)["checks"]


def test_malformed_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "r.json"
    code, _, err = run(["check", "poisson", str(bad), "--json", str(out)], capsys)
    assert code == 2 and "error" in err
    report = json.loads(out.read_text())
    validate(report)
    assert report["verdict"] == "ERROR" and "error" in report


def test_invalid_document_exits_2(tmp_path, capsys):
    doc = tmp_path / "d.json"
    doc.write_text(json.dumps({"vars": ["x", "y"], "bivector": [{"indices": [1, 0], "coeff": "1"}]}))
    assert run(["check", "poisson", str(doc)], capsys)[0] == 2
    doc.write_text(json.dumps({"vars": ["x", "y"], "bivector": [{"indices": [0, 1], "coeff": "1.5"}]}))
    assert run(["check", "poisson", str(doc)], capsys)[0] == 2


def test_missing_file_exits_2(tmp_path, capsys):
    assert run(["check", "poisson", str(tmp_path / "none.json")], capsys)[0] == 2


def test_unknown_subcommand_exits_2(capsys):
    assert run(["frobnicate"], capsys)[0] == 2
    assert run(["jet", "frobnicate", "x.json"], capsys)[0] == 2


def test_bad_seed_exits_2(capsys):
    assert run(["--seed", "-1", "catalog", "list"], capsys)[0] == 2


def test_catalog_list_and_unknown_entry(capsys):
    code, out, _ = run(["catalog", "list"], capsys)
    assert code == 0 and "florian" in out
    assert run(["catalog", "run", "no-such-entry"], capsys)[0] == 2


def test_catalog_run_single_entry(capsys):
    code, out, _ = run(["catalog", "run", "florian", "--json", "-"], capsys)
    assert code == 0
    report = json.loads(out)
    validate(report)
    assert report["checks"][0]["mode"] == "catalog" and report["checks"][0]["status"] == "PASS"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "poissonjet", "check", "poisson", str(MODELS / "so3.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout
