import json

import numpy as np
import pytest

from l1homotopy.bpdn import solve_bpdn
from l1homotopy.cli import main
from l1homotopy.dynamic_seq import bpdn_add_measurement
from l1homotopy.matio import read_matrix, write_matrix


@pytest.fixture
def problem(tmp_path):
    g = np.random.default_rng(0)
    A = g.standard_normal((20, 40)) / np.sqrt(20)
    x = np.zeros(40)
    x[[3, 11, 30]] = [1.0, -1.0, 1.0]
    y = A @ x + 0.01 * g.standard_normal(20)
    write_matrix(tmp_path / "A.bin", A)
    write_matrix(tmp_path / "y.csv", y.reshape(-1, 1))
    return tmp_path, A, y


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_bpdn_and_ds(problem, capsys):
    d, A, y = problem
    for kind in ("bpdn", "ds"):
        code, out, _ = run(capsys, "solve", kind, "--matrix", d / "A.bin", "--rhs", d / "y.csv",
                           "--tau-ratio", 0.2, "--out", d / f"{kind}.csv")
        assert code == 0
        doc = json.loads(out)
        assert doc["kkt"] and doc["support"]
        np.testing.assert_allclose(read_matrix(d / f"{kind}.csv")[:, 0], doc["x"])


def test_tau_ratio_one_gives_zero(problem, capsys):
    d, _, _ = problem
    code, out, _ = run(capsys, "solve", "bpdn", "--matrix", d / "A.bin", "--rhs", d / "y.csv", "--tau-ratio", 1.0)
    assert code == 0
    doc = json.loads(out)
    assert not any(doc["x"]) and doc["support"] == []


def test_config_errors_exit_one(problem, capsys):
    d, _, _ = problem
    assert run(capsys, "solve", "bpdn", "--matrix", d / "A.bin", "--rhs", d / "y.csv", "--tau-ratio", 0)[0] == 1
    assert run(capsys, "solve", "lasso")[0] == 1
    assert run(capsys, "solve", "bpdn", "--matrix", d / "nope.bin", "--rhs", d / "y.csv", "--tau-ratio", 0.1)[0] == 1
    assert run(capsys, "bench", "tableII", "--signal", "blocks")[0] == 1
    assert run(capsys, "bench", "tableI", "--trials", 0)[0] == 1
    assert run(capsys, "decode", "run", "--n", 10, "--m", 5, "--errors", 1)[0] == 1
    code, _, err = run(capsys, "decode", "run", "--n", 4, "--m", 8, "--errors", 1, "--seed", "banana")
    assert code == 1 and "seed" in err


def test_refuses_to_overwrite_input(problem, capsys):
    d, _, _ = problem
    before = (d / "y.csv").read_bytes()
    code, _, err = run(capsys, "solve", "bpdn", "--matrix", d / "A.bin", "--rhs", d / "y.csv",
                       "--tau-ratio", 0.2, "--out", d / "y.csv")
    assert code == 1 and "overwrite" in err
    assert (d / "y.csv").read_bytes() == before


def test_update_round_trip(problem, capsys):
    d, A, y = problem
    a_bytes = (d / "A.bin").read_bytes()
    assert run(capsys, "solve", "bpdn", "--matrix", d / "A.bin", "--rhs", d / "y.csv", "--tau-ratio", 0.2,
               "--save-state", d / "s0.l1h")[0] == 0
    g = np.random.default_rng(1)
    b = g.standard_normal(40) / np.sqrt(20)
    write_matrix(d / "b.csv", b.reshape(-1, 1))
    state_bytes = (d / "s0.l1h").read_bytes()
    code, out, _ = run(capsys, "update", "dynamic-seq", "--state", d / "s0.l1h", "--new-row", d / "b.csv",
                       "--new-value", 0.25, "--save-state", d / "s1.l1h")
    assert code == 0
    doc = json.loads(out)
    assert doc["kkt"] and doc["epsilon"] == 1.0
    tau = 0.2 * float(np.abs(A.T @ y).max())
    st, _ = solve_bpdn(A, y, tau)
    ref, _ = bpdn_add_measurement(st, A, y, b, 0.25)
    assert np.abs(np.array(doc["x"]) - ref.x).max() <= 1e-9
    # inputs untouched
    assert (d / "s0.l1h").read_bytes() == state_bytes
    assert (d / "A.bin").read_bytes() == a_bytes
    y2 = y + 0.05 * g.standard_normal(20)
    write_matrix(d / "y2.csv", y2.reshape(-1, 1))
    assert run(capsys, "update", "dynamic-x", "--state", d / "s0.l1h", "--new-rhs", d / "y2.csv")[0] == 0
    assert run(capsys, "update", "dynamic-x", "--state", d / "s0.l1h")[0] == 1
    assert run(capsys, "update", "dynamic-seq", "--state", d / "A.bin", "--new-row", d / "b.csv",
               "--new-value", 1)[0] == 1


def test_update_ds_state(problem, capsys):
    d, A, y = problem
    assert run(capsys, "solve", "ds", "--matrix", d / "A.bin", "--rhs", d / "y.csv", "--tau-ratio", 0.3,
               "--save-state", d / "s.l1h")[0] == 0
    write_matrix(d / "y2.csv", (y * 1.05).reshape(-1, 1))
    code, out, _ = run(capsys, "update", "dynamic-x", "--state", d / "s.l1h", "--new-rhs", d / "y2.csv")
    assert code == 0 and json.loads(out)["kkt"]


def test_decode_commands(tmp_path, capsys):
    code, out, _ = run(capsys, "decode", "run", "--n", 16, "--m", 48, "--errors", 4, "--block", 3, "--seed", 3)
    assert code == 0
    doc = json.loads(out)
    assert doc["recovered"] and doc["kkt"]
    code, _, _ = run(capsys, "decode", "robust", "--n", 16, "--m", 48, "--errors", 4, "--noise", 0.01,
                     "--block", 3, "--seed", "0x3", "--report", tmp_path / "r.json")
    assert code == 0
    assert json.loads((tmp_path / "r.json").read_text())["kkt"]


def test_seed_from_environment(capsys, monkeypatch):
    argv = ("decode", "run", "--n", 8, "--m", 24, "--errors", 3)
    monkeypatch.setenv("L1H_SEED", "11")
    a = run(capsys, *argv)[1]
    b = run(capsys, *argv, "--seed", 11)[1]
    monkeypatch.delenv("L1H_SEED")
    c = run(capsys, *argv)[1]
    assert a == b and a != c


def test_bench_deterministic(tmp_path, capsys):
    argv = ("bench", "tableII", "--scale", "desk", "--trials", 50, "--seed", 7)
    assert run(capsys, *argv, "--report", tmp_path / "a.json", "--csv", tmp_path / "a.csv")[0] == 0
    assert run(capsys, *argv, "--report", tmp_path / "b.json")[0] == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    doc = json.loads((tmp_path / "a.json").read_text())
    assert doc["passed"] and len(doc["reports"]) == 4
    rows = (tmp_path / "a.csv").read_text().splitlines()
    assert rows[0] == "method,lambda,mean_nprod,mean_time" and len(rows) == 9


def test_bench_signal_row(capsys):
    code, out, _ = run(capsys, "bench", "tableI", "--signal", "image", "--trials", 3)
    assert code == 0 and "image" in out


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest", "--instances", 5)
    assert code == 0
    assert "FAIL" not in out and out.count("PASS") == 10
