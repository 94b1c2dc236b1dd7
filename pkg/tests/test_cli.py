import json
import subprocess
import sys
from pathlib import Path

import pytest

from powerlag import scenarios
from powerlag.cli import (EXIT_CHECK_FAILED, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, derive_text,
                          format_table, run, run_checks)

GOLDEN = Path(__file__).parent / "golden"


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_to_stdout(capsys):
    code, out, _ = call(capsys, "simulate", "--scenario", "damped_oscillator", "--t1", "10", "--out", "-")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "t,q0,qd0,U,balance_residual"
    assert float(lines[-1].split(",")[0]) == 10.0


def test_simulate_json_and_file(capsys, tmp_path):
    target = tmp_path / "run.jsonl"
    code, out, _ = call(capsys, "simulate", "--scenario", "pendulum", "--t1", "0.2",
                        "--format", "json", "--out", str(target))
    assert code == EXIT_OK and out == ""
    rows = [json.loads(line) for line in target.read_text().splitlines()]
    assert set(rows[0]) == {"t", "q0", "q1", "qd0", "qd1", "mu0", "U", "balance_residual", "f0"}


def test_simulate_overrides(capsys):
    code, out, _ = call(capsys, "simulate", "--scenario", "damped_oscillator", "--t0", "1",
                        "--t1", "2", "--method", "rk4", "--dt", "0.25")
    times = [float(line.split(",")[0]) for line in out.splitlines()[1:]]
    assert code == EXIT_OK and times == [1.0, 1.25, 1.5, 1.75, 2.0]


@pytest.mark.parametrize("name", scenarios.names())
def test_emitted_file_reproduces_scenario(capsys, tmp_path, name):
    code, text, _ = call(capsys, "scenario", "--emit", name)
    assert code == EXIT_OK
    path = tmp_path / f"{name}.model"
    path.write_text(text)
    _, direct, _ = call(capsys, "simulate", "--scenario", name, "--t1", "0.5")
    _, via_file, _ = call(capsys, "simulate", str(path), "--t1", "0.5")
    _, via_flag, _ = call(capsys, "simulate", "--model", str(path), "--t1", "0.5")
    assert direct == via_file == via_flag


def test_scenario_listing(capsys):
    code, out, _ = call(capsys, "scenario")
    assert code == EXIT_OK and out.split() == scenarios.names()


@pytest.mark.parametrize("name", ["parabola_particle", "lad_uniform_field"])
def test_derive_matches_golden(capsys, name):
    code, out, _ = call(capsys, "derive", "--scenario", name)
    assert code == EXIT_OK
    assert out.encode() == (GOLDEN / f"{name}.txt").read_bytes()


def test_derive_is_stable():
    spec = scenarios.parabola_particle().spec
    assert derive_text(spec) == derive_text(scenarios.parabola_particle().spec)


def test_check_all_parabola(capsys):
    code, out, _ = call(capsys, "check", "all", "--scenario", "parabola_particle", "--seed", "7")
    assert code == EXIT_OK
    header, *rows = out.splitlines()
    assert header.split()[:4] == ["check", "samples", "max_deviation", "tolerance"]
    names = [r.split()[0] for r in rows]
    assert names == sorted(names)
    assert "covariance:cubic_time" in names and "identity" in names


def test_check_is_deterministic_and_writes_json(capsys, tmp_path):
    report = tmp_path / "r.json"
    argv = ["check", "covariance", "--scenario", "knife_edge", "--seed", "3", "--samples", "20"]
    code, first, _ = call(capsys, *argv, "--out", str(report))
    _, second, _ = call(capsys, *argv)
    assert code == EXIT_OK and first == second
    doc = json.loads(report.read_text())
    assert doc["passed"] and doc["seed"] == 3
    assert {r["name"] for r in doc["reports"]} == {f"covariance:{n}" for n in
                                                   ("translation", "scaling", "sinh", "cubic_time", "rotation")}
    _, as_json, _ = call(capsys, *argv, "--format", "json")
    assert json.loads(as_json) == doc


def test_failing_check_exits_one(capsys, tmp_path):
    path = tmp_path / "lad.model"
    _, text, _ = call(capsys, "scenario", "--emit", "lad_nonrelativistic")
    path.write_text(text)
    code, out, _ = call(capsys, "check", "homogeneity", str(path), "--samples", "10")
    assert code == EXIT_CHECK_FAILED and "FAIL" in out


def test_check_all_skips_undeclared_homogeneity():
    results = run_checks(scenarios.parabola_particle().spec, "all", samples=10)
    skipped = dict(r for r in results if isinstance(r, tuple))
    assert "homogeneity" in skipped
    assert "skipped" in format_table(results)


@pytest.mark.parametrize("argv", [
    [],
    ["simulate"],
    ["simulate", "--scenario", "nope"],
    ["simulate", "--scenario", "pendulum", "--bogus"],
    ["simulate", "a.model", "--scenario", "pendulum"],
    ["simulate", "/nonexistent/file.model"],
    ["simulate", "--scenario", "pendulum", "--t1", "-1"],
    ["check", "everything", "--scenario", "pendulum"],
    ["check", "identity", "--scenario", "pendulum", "--samples", "0"],
    ["spectrum", "--gamma", "0", "--mu", "1", "--hlambda", "1", "--p0", "1"],
    ["spectrum", "--gamma", "1", "--mu", "1", "--hlambda", "1"],
    ["scenario", "--emit", "nope"],
])
def test_usage_errors(capsys, argv):
    code, out, err = call(capsys, *argv)
    assert code == EXIT_USAGE and err


def test_malformed_model_file(capsys, tmp_path):
    path = tmp_path / "bad.model"
    path.write_text("[meta]\nn = 1\n[lagrangian]\nL = 0.5*qd0^\n")
    code, _, err = call(capsys, "simulate", str(path))
    assert code == EXIT_USAGE and "line 4" in err


def test_numerical_failure(capsys, tmp_path):
    path = tmp_path / "singular.model"
    path.write_text("[meta]\nn = 2\n[lagrangian]\nL = 0.5*qd0^2 + 0.5*(0.5 - t)*qd1^2\n"
                    "[initial]\nq = 0, 0\nqd = 1, 1\n[integrator]\nmethod = rk4\nt1 = 1\ndt = 0.25\n")
    code, out, err = call(capsys, "simulate", str(path))
    assert code == EXIT_NUMERICAL and "singular_dynamics" in err
    assert len(out.splitlines()) == 3


def test_spectrum_table(capsys):
    code, out, _ = call(capsys, "spectrum", "--gamma", "1", "--mu", "1", "--hlambda", "1",
                        "--p0", "3.141592653589793", "--nmax", "2")
    assert code == EXIT_OK
    assert out.splitlines() == ["n,W_n", "0,0", "1,1.5", "2,6"]
    code, out, _ = call(capsys, "spectrum", "--gamma", "1", "--mu", "1", "--hlambda", "1",
                        "--p0", "1", "--nmax", "1", "--format", "json")
    assert [json.loads(line)["n"] for line in out.splitlines()] == [0, 1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "powerlag", "scenario"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.split() == scenarios.names()
    proc = subprocess.run([sys.executable, "-m", "powerlag", "bogus"], capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
