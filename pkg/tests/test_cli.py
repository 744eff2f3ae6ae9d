import csv
import io
import json
import subprocess
import sys
from importlib.resources import files

import pytest

from acoherence.cli import main, ratio_label

jsonschema = pytest.importorskip("jsonschema")
RESULTS_SCHEMA = json.loads(files("acoherence").joinpath("schemas/results.schema.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, RESULTS_SCHEMA)
    return doc


def test_probs_routes_agree(capsys):
    doc = run_json(capsys, "probs", "--state", "thermal:0.5", "--kappa", "0.1", "--methods", "exact,oracle")
    assert set(doc["result"]["methods"]) == {"exact", "oracle"}
    assert max(doc["result"]["max_abs_diff"]) < 1e-10


def test_probs_zero_coupling_csv(capsys):
    code, out, _ = run(capsys, "probs", "--state", "coherent:1+0i", "--kappa", "0", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["n", "exact", "max_abs_diff"]
    assert rows[1][:2] == ["0", "1"]


def test_fock_with_exact_method_is_usage_error(capsys):
    code, _, err = run(capsys, "probs", "--state", "fock:3", "--kappa", "0.1", "--methods", "exact")
    assert code == 2
    assert "P function" in err


@pytest.mark.parametrize("argv", [
    ["probs", "--state", "thermal:1"],
    ["probs", "--state", "thermal:1", "--kappa", "0.1", "--gamma0", "1", "--dt", "1"],
    ["probs", "--state", "thermal:1", "--gamma0", "1"],
    ["probs", "--state", "laser:1", "--kappa", "0.1"],
    ["probs", "--state", "thermal:1", "--kappa", "0.1", "--methods", "magic"],
    ["probs", "--state", "thermal:1", "--kappa", "0.1", "--eta", "2"],
    ["probs", "--kappa", "0.1"],
    ["nonsense"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_truncation_failure_is_numerical_error(capsys):
    code, _, err = run(capsys, "probs", "--state", "thermal:5000", "--kappa", "0.1", "--methods", "oracle")
    assert code == 3
    assert "tail" in err


def test_ratio_labels(capsys):
    doc = run_json(capsys, "ratio", "--state", "thermal:1", "--kappa", "0.1")
    assert doc["result"]["methods"]["exact"]["label"] == "thermal-like"
    assert doc["result"]["methods"]["exact"]["R"] == 2.0
    doc = run_json(capsys, "ratio", "--state", "coherent:1", "--kappa", "0.1")
    assert doc["result"]["methods"]["exact"]["label"] == "maximally classical"
    doc = run_json(capsys, "ratio", "--state", "fock:1", "--kappa", "0.1")
    res = doc["result"]["methods"]["oracle"]
    assert res["R"] == 0.0 and res["R_prime"] is None and res["R_prime_undefined"] == "P2 = 0"
    doc = run_json(capsys, "ratio", "--state", "squeezed:1", "--kappa", "0.02")
    assert doc["result"]["methods"]["oracle"]["label"] == "squeezed-vacuum-like"
    assert ratio_label(None) == "undefined"
    assert ratio_label(0.5) == "sub-Poissonian (nonclassical)"


def test_moments(capsys):
    doc = run_json(capsys, "moments", "--state", "squeezed:0.5", "--kappa", "0.1")
    rows = doc["result"]["moments"]
    assert all(abs(r["analytic"] - r["oracle"]) < 1e-9 * max(1, r["oracle"]) for r in rows)
    assert "variance_counts" in doc["result"]
    doc = run_json(capsys, "moments", "--state", "vacuum")
    assert doc["result"]["mandel_q"] is None


def test_twelve_significant_digits(capsys):
    code, out, _ = run(capsys, "probs", "--state", "thermal:0.5", "--kappa", "0.1", "--format", "csv")
    value = out.splitlines()[2].split(",")[1]
    assert len(value.replace("0.", "", 1).lstrip("0").replace(".", "").split("e")[0]) <= 12


def test_sample_is_reproducible(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ACOHERENCE_OUT_DIR", str(tmp_path))
    argv = ["sample", "--state", "thermal:1", "--gamma0", "0.5", "--dt", "1", "--windows", "500",
            "--seed", "17", "--format", "csv"]
    assert run(capsys, *argv, "--out", "a.csv")[0] == 0
    assert run(capsys, *argv, "--out", "b.csv")[0] == 0
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    assert a.splitlines()[0] == "window_index,j"
    assert len(a.splitlines()) == 501


def test_sample_json_summary(capsys):
    doc = run_json(capsys, "sample", "--state", "coherent:1", "--gamma0", "1", "--dt", "1", "--windows", "300")
    assert doc["result"]["windows"] == 300


def test_sample_rejects_empty_experiment(capsys):
    assert run(capsys, "sample", "--state", "coherent:1", "--gamma0", "1", "--dt", "1", "--windows", "0")[0] == 2
    assert run(capsys, "sample", "--state", "coherent:1", "--kappa", "1", "--windows", "5")[0] == 2


def test_thermal_sample_and_test(capsys):
    doc = run_json(capsys, "test", "--state", "thermal:1", "--gamma0", "1", "--dt", "1", "--windows", "10000",
                   "--nboot", "199")
    assert doc["result"]["report"]["verdict"] == "reject"


def test_test_from_counts_file(tmp_path, capsys):
    path = tmp_path / "counts.csv"
    path.write_text("window_index,j\n0,1\n1,0\n2,2\n3,1\n4,0\n")
    code, out, _ = run(capsys, "test", "--counts", str(path), "--nboot", "99", "--format", "csv")
    assert code == 0
    assert "verdict" in out
    assert run(capsys, "test", "--counts", str(path), "--alternatives", "laser")[0] == 2


def test_astro(capsys, tmp_path):
    doc = run_json(capsys, "astro", "--preset", "GW150914")
    assert abs(doc["result"]["rows"][0]["dt_max_s"] - 5e-3) < 1e-3
    code, out, _ = run(capsys, "astro", "--preset", "GW170817@200Hz", "--format", "csv")
    row = dict(zip(*list(csv.reader(io.StringIO(out)))))
    assert abs(float(row["dt_max_s"]) - 0.070) < 0.014
    scen = tmp_path / "bar.json"
    scen.write_text(json.dumps({"chirps": ["GW150914"], "bar": {"M_kg": 2300, "L_m": 3, "nu_Hz": 900}}))
    code, out, _ = run(capsys, "astro", "--scenario", str(scen), "--format", "csv")
    assert code == 0 and "gamma0_per_s" in out.splitlines()[0]
    assert run(capsys, "astro", "--preset", "GW000000")[0] == 2


def test_state_from_json_file(tmp_path, capsys):
    f = tmp_path / "state.json"
    f.write_text(json.dumps({"schema_version": 1, "kind": "gaussian", "x0": 1, "r": 0.2, "phi": 0, "n_th": 0.1}))
    doc = run_json(capsys, "probs", "--state", f"@{f}", "--kappa", "0.05", "--methods", "gaussian,oracle")
    assert doc["config"]["state"]["kind"] == "gaussian"


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "acoherence.cli", "ratio", "--state", "thermal:2",
                           "--kappa", "0.2", "--format", "csv"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "thermal-like" in proc.stdout
