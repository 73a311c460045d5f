import csv
import io
import json
import math
import subprocess
import sys
from importlib import resources

import jsonschema
import numpy as np
import pytest

from cpnb.cli import main
from cpnb.spectra import LevelParams, normalization_N


@pytest.fixture(scope="module")
def schema():
    return json.loads(resources.files("cpnb").joinpath("report_schema.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_wtable_csv(capsys):
    code, out, _ = run(capsys, "wtable", "--n", "1", "--two-nu", "1", "--m", "1", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["k", "lambda", "w_formula", "w_oracle", "residual"]
    oracle = [float(r["w_oracle"]) for r in rows[:4]]
    np.testing.assert_allclose(oracle, [1, 1 / 15, 1 / 5, 9 / 35], rtol=1e-12)
    assert len(rows) == 6
    # 17 significant digits, '.' separator
    assert rows[1]["w_formula"] == format(float(rows[1]["w_formula"]), ".17g")


def test_wtable_json(capsys):
    code, out, _ = run(capsys, "wtable", "--n", "2", "--two-nu", "0", "--m", "0", "--kmax", "0")
    doc = json.loads(out)
    assert code == 0 and len(doc["rows"]) == 1
    assert doc["rows"][0]["k"] == 0 and math.isclose(doc["rows"][0]["w_oracle"], 1.0, rel_tol=1e-13)
    code, out, _ = run(capsys, "wtable", "--n", "1", "--two-nu", "1", "--m", "0")
    rows = json.loads(out)["rows"]
    for r in rows[:2]:
        assert math.isclose(r["w_formula"], r["w_oracle"], rel_tol=1e-12)


def test_wtable_out_file(tmp_path, capsys):
    path = tmp_path / "w.csv"
    assert main(["wtable", "--n", "1", "--two-nu", "2", "--m", "0", "--format", "csv", "--out", str(path)]) == 0
    assert capsys.readouterr().out == ""
    assert path.read_text().startswith("k,lambda,w_formula,w_oracle,residual\n")


@pytest.mark.parametrize("argv", [
    ["wtable", "--n", "0", "--two-nu", "1", "--m", "0"],
    ["wtable", "--n", "1", "--two-nu", "-1", "--m", "0"],
    ["wtable", "--n", "1", "--two-nu", "1"],
    ["verify", "--suite", "nope"],
    ["kernel", "--n", "1", "--two-nu", "1", "--m", "0", "--which", "psi:x"],
    ["kernel", "--n", "1", "--two-nu", "1", "--m", "0", "--which", "bergman"],
    ["transform", "--n", "1", "--two-nu", "1", "--m", "0", "--f", "chord", "--z", "0.5,0", "--method", "radial"],
    ["transform", "--n", "2", "--two-nu", "1", "--m", "0", "--z", "0.5,0"],
    ["transform", "--n", "1", "--two-nu", "1", "--m", "0", "--f", "square"],
])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
    assert capsys.readouterr().err


def test_verify_berezin_small(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "berezin", "--grid", "small", "--seed", "42")
    assert code == 0
    line = next(l for l in out.splitlines() if "normalization_B1" in l)
    assert line.startswith("pass") and "tol=1e-10" in line


def test_verify_spectra_reports_findings(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "spectra", "--json")
    doc = json.loads(out)
    assert code == 0
    probes = [c for c in doc["checks"] if c["params"] == {"n": 1, "two_nu": 1, "m": 0}
              and c["name"].startswith("eigenvalue_probe")]
    assert any(c["status"] == "finding" for c in probes)
    assert any(math.isclose(c["measured"], -2.0, rel_tol=1e-4) for c in probes)


def test_verify_all_json_schema_and_determinism(capsys, schema):
    code, first, _ = run(capsys, "verify", "--suite", "all", "--json")
    _, second, _ = run(capsys, "verify", "--suite", "all", "--json")
    assert code == 0
    assert first == second
    doc = json.loads(first)
    jsonschema.validate(doc, schema)
    assert doc["schema_version"] == "1"
    for c in doc["checks"]:
        if c["status"] == "pass" and c["expected"] is not None:
            assert abs(c["measured"] - c["expected"]) <= c["tolerance"]


def test_kernel_grid(capsys):
    code, out, _ = run(capsys, "kernel", "--n", "1", "--two-nu", "1", "--m", "0", "--which", "berezin", "--points", "3")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["x", "value"]
    np.testing.assert_allclose([float(r[1]) for r in rows[1:]], [0, 1 / math.pi, 2 / math.pi], atol=1e-16)
    _, out, _ = run(capsys, "kernel", "--n", "2", "--two-nu", "1", "--m", "0", "--which", "psi:0", "--format", "json")
    vals = [pt["value"] for pt in json.loads(out)["points"]]
    assert len(vals) == 101 and np.allclose(vals, 2 / math.pi ** 2, rtol=1e-14)
    _, out, _ = run(capsys, "kernel", "--n", "2", "--two-nu", "2", "--m", "1", "--which", "reproducing", "--points", "5")
    last = list(csv.reader(io.StringIO(out)))[-1]
    assert float(last[0]) == 1.0
    assert math.isclose(float(last[1]), normalization_N(LevelParams(2, 2, 1)), rel_tol=1e-14)


def test_transform_radial(capsys):
    code, out, _ = run(capsys, "transform", "--n", "2", "--two-nu", "1", "--m", "1", "--f", "const")
    assert code == 0 and math.isclose(float(out.split()[1]), 1.0, rel_tol=1e-12)
    _, out, _ = run(capsys, "transform", "--n", "1", "--two-nu", "1", "--m", "0", "--f", "chord",
                    "--method", "radial")
    assert math.isclose(float(out.split()[1]), 1 / 3, rel_tol=1e-14)


def test_transform_mc_psi(capsys):
    argv = ["transform", "--n", "1", "--two-nu", "1", "--m", "0", "--f", "psi:1", "--method", "mc",
            "--samples", "1000000", "--seed", "7", "--z", "0.3,-0.2", "--json"]
    code, out, _ = run(capsys, *argv)
    doc = json.loads(out)
    exact = (1 / 3) * doc["f_at_z"]
    assert code == 0 and abs(doc["value"] - exact) <= 3 * doc["stderr"]
    _, again, _ = run(capsys, *argv)
    assert again == out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cpnb", "wtable", "--n", "1", "--two-nu", "0", "--m", "0",
                           "--format", "csv"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1].startswith("0,0,1,")
