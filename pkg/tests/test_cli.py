import csv
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kreinkit import ConfigError, load_model, write_matrix
from kreinkit.cli import _parse_ranks, main


def read_csv(path):
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    return rows[0], rows[1:]


def synthetic_args(n=80):
    return ["--synthetic", "two_gaussians", "--n", str(n), "--p", "3",
            "--kernel", "kernel=gaussdiff sigma1=1.0 sigma2=3.0"]


# ---------------------------------------------------------------------------
# schedules


def test_parse_ranks_list():
    assert _parse_ranks("10,20,40") == [10, 20, 40]


def test_parse_ranks_geometric():
    assert _parse_ranks("10:160:x2") == [10, 20, 40, 80, 160]
    assert _parse_ranks("10:320:x2") == [10, 20, 40, 80, 160, 320]


def test_parse_ranks_rejects_bad_schedules():
    for text in ("10:5:x2", "10:20:x0.5", "10:20:2", "a,b", "0,5", ""):
        with pytest.raises(ConfigError):
            _parse_ranks(text)


# ---------------------------------------------------------------------------
# flops


def test_flops_table(tmp_path, capsys):
    rc = main(["flops", "--n", "1000000", "--m", "1000", "--out", str(tmp_path)])
    assert rc == 0
    header, rows = read_csv(tmp_path / "flops.csv")
    assert header == ["n", "m", "one_shot", "sgt", "savings"]
    assert rows[0] == ["1000000", "1000", "3003000000000", "7002000000000",
                       "3999000000000"]
    out = capsys.readouterr().out
    assert "3003000000000" in out


# ---------------------------------------------------------------------------
# approx


def test_approx_outputs_and_row_counts(tmp_path):
    out = tmp_path / "run"
    rc = main(["approx", *synthetic_args(), "--samplers", "uniform,kmeanspp",
               "--ranks", "5,10", "--reps", "4", "--seed", "3", "--out", str(out)])
    assert rc == 0
    header, rows = read_csv(out / "approx_raw.csv")
    assert header == ["sampler", "k", "l", "repetition", "frobenius_error", "seconds"]
    assert len(rows) == 2 * 2 * 4  # samplers x ranks x repetitions
    header, medians = read_csv(out / "approx_median.csv")
    assert len(medians) == 4
    result = json.loads((out / "result.json").read_text())
    assert result["schema_version"] == 1
    assert result["artifact"]["name"] == "kreinkit"
    assert result["config"]["seed"] == 3


def test_approx_exact_recovery_at_full_budget(tmp_path):
    out = tmp_path / "full"
    rc = main(["approx", *synthetic_args(n=40), "--samplers", "uniform",
               "--ranks", "40", "--reps", "2", "--seed", "0", "--out", str(out)])
    assert rc == 0
    _, rows = read_csv(out / "approx_raw.csv")
    # k = l = n: the sweep reproduces the matrix up to round-off
    for row in rows:
        assert float(row[4]) <= 1e-6


def test_approx_deterministic_error_columns(tmp_path):
    args = ["approx", *synthetic_args(), "--samplers", "leverage",
            "--ranks", "6", "--reps", "3", "--seed", "11"]
    rc1 = main([*args, "--out", str(tmp_path / "a")])
    rc2 = main([*args, "--out", str(tmp_path / "b")])
    assert rc1 == rc2 == 0
    _, rows_a = read_csv(tmp_path / "a" / "approx_raw.csv")
    _, rows_b = read_csv(tmp_path / "b" / "approx_raw.csv")
    assert [r[:5] for r in rows_a] == [r[:5] for r in rows_b]


def test_approx_workers_do_not_change_results(tmp_path):
    base = ["approx", *synthetic_args(), "--samplers", "uniform,kmeanspp",
            "--ranks", "5,9", "--reps", "3", "--seed", "5"]
    main([*base, "--out", str(tmp_path / "serial")])
    main([*base, "--workers", "4", "--out", str(tmp_path / "parallel")])
    _, rows_s = read_csv(tmp_path / "serial" / "approx_raw.csv")
    _, rows_p = read_csv(tmp_path / "parallel" / "approx_raw.csv")
    assert [r[:5] for r in rows_s] == [r[:5] for r in rows_p]


def test_approx_logn_budget(tmp_path):
    out = tmp_path / "logn"
    rc = main(["approx", *synthetic_args(n=60), "--samplers", "uniform",
               "--ranks", "5", "--landmark-factor", "logn", "--reps", "2",
               "--seed", "0", "--out", str(out)])
    assert rc == 0
    _, rows = read_csv(out / "approx_raw.csv")
    assert rows[0][1] == "5" and rows[0][2] == "21"  # ceil(5 ln 60) = 21


# ---------------------------------------------------------------------------
# eigen / sample / train


def test_eigen_command(tmp_path):
    out = tmp_path / "eig"
    rc = main(["eigen", *synthetic_args(), "--m", "10", "--method", "sgt",
               "--seed", "2", "--out", str(out)])
    assert rc == 0
    result = json.loads((out / "result.json").read_text())
    assert result["orthonormality_residual"] < 1e-8
    assert result["reconstruction_relative_error"] < 1e-8
    header, rows = read_csv(out / "eigenvalues.csv")
    assert header == ["index", "eigenvalue"]
    assert len(rows) == result["effective_rank"] or len(rows) <= 10


def test_sample_command_deterministic(tmp_path):
    args = ["sample", *synthetic_args(), "--m", "7", "--sampler", "kmeanspp",
            "--seed", "9"]
    main([*args, "--out", str(tmp_path / "a")])
    main([*args, "--out", str(tmp_path / "b")])
    rows_a = (tmp_path / "a" / "landmarks.csv").read_text()
    rows_b = (tmp_path / "b" / "landmarks.csv").read_text()
    assert rows_a == rows_b
    header, rows = read_csv(tmp_path / "a" / "landmarks.csv")
    assert header == ["position", "index", "multiplicity"]
    assert len(rows) == 7


def test_train_writes_loadable_model(tmp_path):
    out = tmp_path / "model"
    rc = main(["train", *synthetic_args(n=60), "--m", "12", "--learner", "shsvm",
               "--lambda-pos", "0.1", "--lambda-neg", "0.2", "--seed", "4",
               "--out", str(out)])
    assert rc == 0
    model, spec = load_model(out / "model.json")
    assert model.learner == "shsvm"
    assert model.reg.lam_pos == 0.1 and model.reg.lam_neg == 0.2
    assert spec is not None
    result = json.loads((out / "result.json").read_text())
    assert result["training_error"] <= 0.2


# ---------------------------------------------------------------------------
# cv


def test_cv_outputs(tmp_path):
    out = tmp_path / "cv"
    rc = main(["cv", *synthetic_args(n=60), "--learners", "lsm", "--ranks", "12",
               "--folds", "3", "--lambdas", "0.01", "--seed", "6", "--out", str(out)])
    assert rc == 0
    header, rows = read_csv(out / "cv_folds.csv")
    assert header == ["learner", "k", "l", "fold", "error"]
    learners = {r[0] for r in rows}
    assert learners == {"lsm", "sf-lsm", "constant"}
    assert sum(1 for r in rows if r[0] == "lsm") == 3
    header, summary = read_csv(out / "cv_summary.csv")
    assert header == ["learner", "k", "l", "mean_error", "std_error", "median_error"]


def test_cv_constant_row_is_majority_class_error(tmp_path):
    out = tmp_path / "cv"
    rc = main(["cv", *synthetic_args(n=60), "--learners", "lsm", "--ranks", "10",
               "--folds", "3", "--lambdas", "0.01", "--seed", "1", "--out", str(out)])
    assert rc == 0
    _, summary = read_csv(out / "cv_summary.csv")
    constant = [r for r in summary if r[0] == "constant"][0]
    # balanced classes: the majority-class predictor errs on half of each fold
    assert float(constant[3]) == pytest.approx(0.5, abs=0.05)


def test_cv_identical_seeds_identical_files(tmp_path):
    args = ["cv", *synthetic_args(n=48), "--learners", "lsm,shsvm", "--ranks", "8",
            "--folds", "3", "--lambdas", "0.01,0.1", "--inner-folds", "2",
            "--seed", "13"]
    main([*args, "--out", str(tmp_path / "a")])
    main([*args, "--out", str(tmp_path / "b")])
    for name in ("cv_folds.csv", "cv_summary.csv"):
        assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()


def test_cv_separable_data_full_budget(tmp_path):
    out = tmp_path / "sep"
    rc = main(["cv", *synthetic_args(n=100), "--no-standardize", "--learners",
               "shsvm", "--ranks", "100", "--folds", "5", "--lambdas", "0.1",
               "--seed", "0", "--out", str(out)])
    assert rc == 0
    _, summary = read_csv(out / "cv_summary.csv")
    shsvm = [r for r in summary if r[0] == "shsvm"][0]
    assert float(shsvm[3]) <= 0.02  # 6-sigma separation, landmarks = all points


# ---------------------------------------------------------------------------
# bench


def test_bench_flops_columns(tmp_path):
    out = tmp_path / "bench"
    rc = main(["bench", "--n-schedule", "400,800", "--m", "50", "--reps", "3",
               "--p", "3", "--seed", "0", "--out", str(out)])
    assert rc == 0
    header, rows = read_csv(out / "bench_summary.csv")
    assert header == ["n", "m", "method", "mean_seconds", "std_seconds",
                      "median_seconds", "flops"]
    for row in rows:
        n, m, method = int(row[0]), int(row[1]), row[2]
        expected = (3 if method == "one_shot" else 7) * m * m * n \
            + (3 if method == "one_shot" else 2) * m**3
        assert int(row[6]) == expected
    result = json.loads((out / "result.json").read_text())
    assert set(result["slopes"]) == {"one_shot", "sgt"}


# ---------------------------------------------------------------------------
# exit codes


def test_exit_code_config_errors(tmp_path, capsys):
    assert main(["approx", "--ranks", "5"]) == 2  # no input source
    assert main(["approx", "--synthetic", "two_gaussians", "--data", "x.csv",
                 "--ranks", "5"]) == 2  # two input sources
    assert main(["approx", *synthetic_args(n=20), "--ranks", "25"]) == 2  # k > n
    assert main(["eigen", *synthetic_args(n=20), "--m", "30"]) == 2
    assert main(["approx", *synthetic_args(), "--ranks", "5", "--reps", "0"]) == 2
    assert main(["approx", "--synthetic", "two_gaussians", "--n", "20",
                 "--kernel", "kernel=warp", "--ranks", "5"]) == 2
    capsys.readouterr()


def test_exit_code_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,9.0\n2.0,3.0\n")  # grossly asymmetric
    assert main(["eigen", "--matrix", str(bad), "--m", "1"]) == 3
    labels = tmp_path / "y.txt"
    labels.write_text("a\nb\n")
    good = tmp_path / "good.csv"
    write_matrix(good, np.eye(3))
    assert main(["cv", "--matrix", str(good), "--labels", str(labels),
                 "--learners", "lsm", "--ranks", "2", "--folds", "2"]) == 3
    capsys.readouterr()


def test_exit_code_solver_errors(tmp_path, capsys):
    zeros = tmp_path / "zeros.csv"
    write_matrix(zeros, np.zeros((4, 4)))
    assert main(["eigen", "--matrix", str(zeros), "--m", "2", "--seed", "0"]) == 4
    capsys.readouterr()


def test_unknown_flag_exits_two(capsys):
    assert main(["approx", "--does-not-exist"]) == 2
    capsys.readouterr()
