import json
import subprocess
import sys

import numpy as np
import pytest

from helpers import random_lasso, random_svm
from sacd import SvmProblem, SvmState, duality_gap, read_csv, serialize_libsvm
from sacd.cli import main


@pytest.fixture
def lasso_file(tmp_path):
    path = tmp_path / "lasso.txt"
    path.write_text(serialize_libsvm(random_lasso(0, 30, 12)))
    return path


@pytest.fixture
def svm_file(tmp_path):
    path = tmp_path / "svm.txt"
    ds = random_svm(1, 25, 10)
    path.write_text(serialize_libsvm(ds))
    return path, ds


def run(*argv):
    return main([str(a) for a in argv])


def test_run_writes_csv_and_summary(lasso_file, tmp_path):
    out, summ = tmp_path / "a.csv", tmp_path / "a.json"
    code = run("run", "--solver", "sa-accbcd", "--data", lasso_file, "-H", 40, "-s", 8,
               "--mu", 2, "--lambda", 0.1, "-P", 3, "--log-every", 10,
               "--out", out, "--summary", summ)
    assert code == 0
    recs = read_csv(out)
    assert [r.iteration for r in recs] == [10, 20, 30, 40]
    info = json.loads(summ.read_text())
    assert info["rounds"] == 5 and info["final_metric"] == recs[-1].metric
    assert info["words"] == 5 * (16 * 17 // 2 + 2 * 16)


def test_default_lambda_is_sigma_min(lasso_file, tmp_path):
    summ = tmp_path / "s.json"
    assert run("run", "--solver", "cd", "--data", lasso_file, "-H", 5,
               "--out", tmp_path / "o.csv", "--summary", summ) == 0
    ds = random_lasso(0, 30, 12)
    expect = 100 * np.linalg.svd(ds.A.to_dense(), compute_uv=False).min()
    assert json.loads(summ.read_text())["lambda"] == pytest.approx(expect, rel=1e-12)


def test_svm_metric_matches_dumped_state(svm_file, tmp_path):
    path, ds = svm_file
    out, npz = tmp_path / "s.csv", tmp_path / "s.npz"
    assert run("run", "--problem", "svm-l1", "--solver", "sa-svm", "--data", path,
               "-H", 60, "-s", 7, "-P", 2, "--out", out, "--dump-state", npz,
               "--summary", tmp_path / "x.json") == 0
    saved = np.load(npz)
    gap = duality_gap(SvmProblem(ds, float(saved["lam"]), "L1"),
                      SvmState(saved["alpha"], saved["x"]))
    assert read_csv(out)[-1].metric == pytest.approx(gap, rel=1e-12, abs=1e-12)


def test_pair_relative_error(lasso_file, tmp_path):
    summ = tmp_path / "p.json"
    assert run("run", "--solver", "sa-bcd", "--data", lasso_file, "-H", 1000, "-s", 1000,
               "--lambda", 0.1, "--log-every", 1000, "--pair", "--out", tmp_path / "p.csv",
               "--summary", summ) == 0
    info = json.loads(summ.read_text())
    assert info["relative_objective_error"] <= 1e-12
    assert info["baseline"]["rounds"] == 1000 and info["rounds"] == 1


def test_compare(lasso_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["--data", lasso_file, "-H", 48, "--lambda", 0.1, "--log-every", 8,
              "--summary", tmp_path / "j.json"]
    assert run("run", "--solver", "accbcd", *common, "--out", a) == 0
    assert run("run", "--solver", "sa-accbcd", "-s", 8, *common, "--out", b) == 0
    assert run("compare", a, a, "--tolerance", 0) == 0
    assert run("compare", a, b) == 0
    # an impossible tolerance is reported as outside
    c = tmp_path / "c.csv"
    assert run("run", "--solver", "accbcd", *common[:-2], "--seed", 5, "--out", c,
               "--summary", tmp_path / "k.json") == 0
    assert run("compare", a, c, "--tolerance", 0) == 1


def test_compare_grid_mismatch(lasso_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["--solver", "cd", "--data", lasso_file, "-H", 10, "--lambda", 0.1,
            "--summary", tmp_path / "j.json"]
    run("run", *base, "--log-every", 2, "--out", a)
    run("run", *base, "--log-every", 5, "--out", b)
    assert run("compare", a, b) == 1


def test_stats(lasso_file, capsys):
    assert run("stats", "--data", lasso_file) == 0
    info = json.loads(capsys.readouterr().out)
    assert (info["rows"], info["cols"]) == (30, 12)


def test_costs(capsys):
    assert run("costs", "--solver", "sa-accbcd", "-H", 100, "-s", 10, "--mu", 4, "-P", 16,
               "-m", 1000, "-n", 500, "-f", 0.1) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["accbcd"]["L"] / info["sa-accbcd"]["L"] == pytest.approx(10)
    assert info["sa-accbcd"]["W"] / info["accbcd"]["W"] == pytest.approx(10)


@pytest.mark.parametrize("argv", [
    ["run", "--solver", "sa-cd", "-H", 5],                      # missing --unroll
    ["run", "--solver", "svm", "-H", 5],                        # wrong problem
    ["run", "--solver", "cd", "-H", 0],
    ["run", "--solver", "cd", "-H", 5, "--lambda", "big"],
    ["run", "--solver", "cd", "-H", 5, "--pair"],
    ["run", "--solver", "nope", "-H", 5],
])
def test_usage_errors(lasso_file, argv):
    assert run(*argv, "--data", lasso_file) == 1


def test_missing_file(tmp_path):
    assert run("stats", "--data", tmp_path / "absent.txt") == 1


def test_parse_error_is_usage(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 1:x\n")
    assert run("stats", "--data", bad) == 1


def test_numerical_failure(tmp_path):
    path = tmp_path / "huge.txt"
    path.write_text("1 1:1e200 2:1e200\n-1 1:1e200\n")
    assert run("run", "--solver", "cd", "--data", path, "-H", 3, "--lambda", 1,
               "--out", tmp_path / "o.csv", "--summary", tmp_path / "o.json") == 2


def test_module_entry_point(lasso_file):
    proc = subprocess.run([sys.executable, "-m", "sacd", "stats", "--data", str(lasso_file)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["rows"] == 30
