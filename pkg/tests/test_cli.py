import json
import os
import subprocess
import sys

import pytest

import fbis.cli as cli
from fbis.errors import DegenerateFit
from fbis.reports import load_json, trace_from_dict


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_is_byte_identical(tmp_path, capsys):
    args = ["simulate", "--example", 2, "--n", 10, "--p", 6, "--rho", 0, "--sigma2", 1, "--seed", 7]
    assert run(args + ["-o", tmp_path / "a.csv"], capsys)[0] == 0
    assert run(args + ["-o", tmp_path / "b.csv"], capsys)[0] == 0
    a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
    assert a == b
    header, first = a.decode().splitlines()[:2]
    assert header == "y,X1,X2,X3,X4,X5,X6"
    assert all("e" not in v or "e-" in v for v in first.split(","))


def test_screen_constant_response(tmp_path, capsys):
    path = tmp_path / "c.csv"
    path.write_text("y,a,b\n1,1,2\n1,2,3\n1,3,1\n")
    code, out, err = run(["screen", path, "--response", "y"], capsys)
    assert code == 3
    assert err.startswith("ERROR DegenerateResponse:") and err.count("\n") == 1


def test_data_and_usage_errors(tmp_path, capsys):
    path = tmp_path / "d.csv"
    path.write_text("y,a,b\n1,1,2\n2,x,3\n3,3,1\n")
    code, _, err = run(["screen", path, "--response", "y"], capsys)
    assert code == 3 and err.startswith("ERROR NonNumericCell:")
    code, _, err = run(["screen", path, "--response", "nope"], capsys)
    assert code == 3 and err.startswith("ERROR MissingColumn:")
    code, _, err = run(["screen", tmp_path / "missing.csv", "--response", "y"], capsys)
    assert code == 2 and err.startswith("ERROR UsageError:")
    code, _, err = run(["screen", path, "--response", "y", "--q", "1.5"], capsys)
    assert code == 2
    code, _, err = run(["simulate", "--example", 1, "--rho", 1.0], capsys)
    assert code == 2 and err.startswith("ERROR InvalidRho:")
    code, _, err = run(["frobnicate"], capsys)
    assert code == 2


def test_numerical_error_exit_code(tmp_path, capsys, monkeypatch):
    path = tmp_path / "e.csv"
    path.write_text("y,a\n1,1\n2,2\n3,4\n")

    def boom(*a, **k):
        raise DegenerateFit("zero residual", variables=[0])

    monkeypatch.setattr(cli, "fbis_screen", boom)
    code, _, err = run(["screen", path, "--response", "y"], capsys)
    assert code == 4 and err == "ERROR DegenerateFit: zero residual\n"


def test_screen_report_and_verbose_log(tmp_path, capsys):
    data = tmp_path / "s.csv"
    assert run(["simulate", "--example", 1, "--n", 80, "--p", 20, "-o", data], capsys)[0] == 0
    out = tmp_path / "r.json"
    before = set(os.listdir(tmp_path))
    code, stdout, _ = run(
        ["screen", data, "--response", "y", "--hard", "--top-k", 5, "--kernel", "gaussian",
         "--permutations", 2, "-o", out, "--verbose"],
        capsys,
    )
    assert code == 0 and stdout == ""
    assert set(os.listdir(tmp_path)) - before == {"r.json", "r.json.log"}
    doc = load_json(out.read_text())
    assert set(doc) == {"version", "config", "result", "timings"}
    res = doc["result"]
    assert len(res["top_k"]) == 5 and min(res["top_k"]) >= 1
    assert "hard_selected" in res
    assert len(res["permutation_ims"]) == 40
    assert doc["config"]["screening"]["kernel"] == "gaussian"
    assert "h*=" in (tmp_path / "r.json.log").read_text()


def test_ifbis_command(tmp_path, capsys):
    data = tmp_path / "s.csv"
    run(["simulate", "--example", 1, "--n", 150, "--p", 20, "--seed", 1, "-o", data], capsys)
    out = tmp_path / "t.json"
    code, _, _ = run(["ifbis", data, "--response", "y", "--xi-grid", "1:24:8", "--k-max", 5,
                      "-o", out], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    trace = trace_from_dict(doc["result"])
    assert [j + 1 for j in trace.final_set] == doc["result"]["final_set"]
    assert doc["config"]["ifbis"]["mekro"]["xi_grid"][-1] == pytest.approx(24.0)
    assert doc["result"]["final_names"] == [f"X{j + 1}" for j in trace.final_set]


def test_bench_small_and_dry_run(tmp_path, capsys, monkeypatch):
    out = tmp_path / "b.csv"
    code, _, _ = run(["bench", "table1", "--reps", 2, "--grid", "2:0:1", "--n", 100, "--p", 20,
                      "--threads", 1, "-o", out], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "example,rho,sigma2,method,metric,mean,se,reps" and len(lines) == 3
    monkeypatch.setenv("FBIS_THREADS", "3")
    code, stdout, _ = run(["bench", "table2", "--reps", 100, "--dry-run"], capsys)
    assert code == 0 and "12 cells x 100 replicates, 3 worker(s)" in stdout
    monkeypatch.setenv("FBIS_THREADS", "zero")
    code, _, err = run(["bench", "table1", "--dry-run"], capsys)
    assert code == 2


def test_bench_json_output(tmp_path, capsys):
    out = tmp_path / "b.json"
    code, _, _ = run(["bench", "table1", "--reps", 1, "--grid", "2:0.5:2", "--n", 60, "--p", 10,
                      "-o", out], capsys)
    assert code == 0
    doc = load_json(out.read_text())
    assert doc["result"]["reps"] == 1 and doc["result"]["notes"]


def test_console_script_and_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fbis", "simulate", "--example", "3", "--n", "5",
                           "--p", "4"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("y,X1,X2,X3,X4\n")
    proc = subprocess.run([sys.executable, "-m", "fbis", "screen"], capture_output=True, text=True)
    assert proc.returncode == 2 and proc.stderr.startswith("ERROR UsageError:")


@pytest.mark.slow
def test_screen_example2_full_scale(tmp_path, capsys):
    data = tmp_path / "ex2.csv"
    run(["simulate", "--example", 2, "--seed", 0, "-o", data], capsys)
    out = tmp_path / "r.json"
    assert run(["screen", data, "--response", "y", "-o", out], capsys)[0] == 0
    assert {1, 2, 3, 4} <= set(json.loads(out.read_text())["result"]["selected"])
