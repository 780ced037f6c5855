import json
import subprocess
import sys

import numpy as np
import pytest

from esic import cli, states


def call(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sic_gen_exact(capsys):
    code, out, _ = call(capsys, "sic", "gen", "--dim", "3")
    doc = json.loads(out)
    assert code == 0 and doc["dimension"] == 3 and doc["generator"] == "XjZk"
    assert len(doc["amplitudes"]) == 3 and doc["residual"] <= 1e-12


def test_sic_gen_search_writes_file(capsys, tmp_path):
    path = tmp_path / "fid.json"
    code, out, _ = call(capsys, "sic", "gen", "--dim", "4", "--seed", "2", "--out", str(path))
    assert code == 0
    assert json.loads(path.read_text()) == json.loads(out)
    code, out, _ = call(capsys, "sic", "verify", "--fiducial", str(path))
    doc = json.loads(out)
    assert code == 0 and doc["certified"] and doc["fidelity_residual"] <= 1e-9


def test_sic_verify_rejects_tampered(capsys, tmp_path):
    path = tmp_path / "fid.json"
    call(capsys, "sic", "gen", "--dim", "2", "--out", str(path))
    doc = json.loads(path.read_text())
    doc["amplitudes"][0][0] += 0.05
    path.write_text(json.dumps(doc))
    code, out, _ = call(capsys, "sic", "verify", "--fiducial", str(path))
    assert code == 3 and not json.loads(out)["certified"]


def test_crit_eval_named(capsys):
    code, out, _ = call(capsys, "crit", "eval", "--state", "bell", "--dims", "2,2")
    doc = json.loads(out)["criteria"]
    assert code == 0
    assert doc["PPT"]["value"] == pytest.approx(2.0) and doc["ESIC"]["value"] == pytest.approx(1.5)
    assert all(v["detected"] for v in doc.values())


def test_crit_eval_state_file(capsys, tmp_path):
    rho = states.horodecki_state(0.3)
    path = tmp_path / "h.json"
    path.write_text(json.dumps(cli.state_file_doc(rho)))
    code, out, _ = call(capsys, "crit", "eval", "--state", str(path), "--dims", "3,3")
    doc = json.loads(out)["criteria"]
    assert code == 0 and not doc["PPT"]["detected"] and doc["ESIC"]["detected"]
    np.testing.assert_allclose(cli.load_state_file(path).matrix, rho.matrix, atol=1e-15)


def test_crit_threshold(capsys):
    code, out, _ = call(capsys, "crit", "threshold", "--state", "bell", "--dims", "2,2", "--criterion", "ccnr")
    assert code == 0 and abs(json.loads(out)["threshold"] - 1 / 3) <= 1e-6


def test_crit_threshold_undetected(capsys):
    code, _, err = call(capsys, "crit", "threshold", "--state", "horodecki:0.5", "--dims", "3,3", "--criterion", "ppt")
    assert code == 1 and json.loads(err)["error"] == "ThresholdError"


def test_crit_dims_mismatch(capsys):
    code, _, err = call(capsys, "crit", "eval", "--state", "bell", "--dims", "3,3")
    assert code == 1 and "message" in json.loads(err)


def test_bad_state_file(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dims": [2, 2], "matrix": [[1.0, 0.0]] * 16}))
    code, _, err = call(capsys, "crit", "eval", "--state", str(path), "--dims", "2,2")
    assert code == 1 and json.loads(err)["error"].endswith("Error")


@pytest.mark.parametrize(
    "argv",
    [
        ["sic", "gen"],
        ["crit", "threshold", "--state", "bell", "--criterion", "jeff"],
        ["exp", "table2"],
        ["exp", "table1", "--format", "xml"],
        [],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = call(capsys, *argv)
    assert code == 2 and json.loads(err)["error"] == "usage"


def test_exp_writes_report_and_summary(capsys, tmp_path):
    out = tmp_path / "t1.csv"
    code, stdout, _ = call(capsys, "exp", "table1", "--samples", "8", "--seed", "1", "--out", str(out))
    assert code == 0
    assert len(out.read_text().splitlines()) == 1 + 3 * 8
    summary = json.loads((tmp_path / "t1.summary.json").read_text())
    assert summary == json.loads(stdout)
    again = tmp_path / "t2.csv"
    call(capsys, "exp", "table1", "--samples", "8", "--seed", "1", "--out", str(again))
    assert again.read_bytes() == out.read_bytes()


def test_exp_json_format(capsys, tmp_path):
    out = tmp_path / "h.json"
    code, _, _ = call(capsys, "exp", "horodecki", "--samples", "1", "--grid", "3", "--out", str(out), "--format", "json")
    assert code == 0 and len(json.loads(out.read_text())) == 3


def test_console_script_subprocess(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "esic.cli", "crit", "eval", "--state", "mixed", "--dims", "2,2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["criteria"]["CCNR"]["value"] == pytest.approx(0.5)
    proc = subprocess.run([sys.executable, "-m", "esic.cli", "crit", "eval", "--state", "nosuch", "--dims", "2,2"], capture_output=True, text=True)
    assert proc.returncode == 1 and json.loads(proc.stderr)["error"] == "ValueError"
