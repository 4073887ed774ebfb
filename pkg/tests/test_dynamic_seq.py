import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_lasso
from l1homotopy.bench import ExperimentConfig, run_experiment
from l1homotopy.bpdn import bpdn_kkt, solve_bpdn
from l1homotopy.dantzig import ds_kkt, solve_ds
from l1homotopy.dynamic_seq import (bpdn_add_measurement, bpdn_remove_measurement, ds_add_measurement,
                                    replay_epsilon)
from l1homotopy.errors import ConfigError
from l1homotopy.homotopy import TERMINAL
from l1homotopy.operators import CountingMatrix


def new_row(g, n, m):
    return g.standard_normal(n) / np.sqrt(m)


def test_consistent_measurement_no_op():
    g = np.random.default_rng(0)
    A, _, y, tau = random_lasso(g, 20, 40)
    s0, _ = solve_bpdn(A, y, tau)
    b = new_row(g, 40, 20)
    s1, tr = bpdn_add_measurement(s0, A, y, b, b @ s0.x)
    assert [ev.kind for ev in tr.steps] == [TERMINAL]
    np.testing.assert_allclose(s1.x, s0.x, atol=1e-12)
    s2, _ = bpdn_add_measurement(s0, A, y, np.zeros(40), 3.0)
    np.testing.assert_allclose(s2.x, s0.x, atol=1e-12)


def test_ds_no_innovation_no_op():
    g = np.random.default_rng(1)
    A, _, y, tau = random_lasso(g, 20, 30)
    d0, _ = solve_ds(A, y, tau)
    b = new_row(g, 30, 20)
    b -= (b @ d0.lam) / (d0.lam @ d0.lam) * d0.lam
    d1, tr = ds_add_measurement(d0, A, y, b, b @ d0.x)
    assert [ev.kind for ev in tr.steps] == [TERMINAL]
    np.testing.assert_allclose(d1.x, d0.x, atol=1e-12)
    np.testing.assert_allclose(d1.lam, d0.lam, atol=1e-12)


def test_ds_identity_matches_bpdn(backend):
    A = np.eye(5)
    y = np.array([2.0, -1.0, 0.3, 0.0, 1.2])
    tau = 0.5
    b = np.array([0.3, 0.0, 0.0, 0.0, 0.0])
    d1, _ = ds_add_measurement(solve_ds(A, y, tau)[0], A, y, b, 0.4)
    b1, _ = bpdn_add_measurement(solve_bpdn(A, y, tau)[0], A, y, b, 0.4)
    np.testing.assert_allclose(d1.x, b1.x, atol=1e-12)
    A2, y2 = np.vstack([A, b]), np.append(y, 0.4)
    assert ds_kkt(A2, y2, tau, d1.x, d1.lam).passed
    assert bpdn_kkt(A2, y2, tau, b1.x).passed


def test_add_then_remove_roundtrip(backend):
    g = np.random.default_rng(2)
    A, _, y, tau = random_lasso(g, 20, 40)
    s0, _ = solve_bpdn(A, y, tau)
    b = new_row(g, 40, 20)
    w = float(g.standard_normal())
    s1, _ = bpdn_add_measurement(s0, A, y, b, w)
    s2, tr = bpdn_remove_measurement(s1, np.vstack([A, b]), np.append(y, w), 20)
    assert np.abs(s2.x - s0.x).max() <= 1e-8
    eps = np.array(tr.epsilons)
    assert np.all(np.diff(eps) < 0) and eps[-1] == 0.0


def test_remove_zero_row():
    g = np.random.default_rng(3)
    A, _, y, tau = random_lasso(g, 20, 40)
    A2, y2 = np.vstack([A, np.zeros(40)]), np.append(y, 0.0)
    s0, _ = solve_bpdn(A2, y2, tau)
    s1, _ = bpdn_remove_measurement(s0, A2, y2, 20)
    np.testing.assert_allclose(s1.x, s0.x, atol=1e-12)
    with pytest.raises(ConfigError):
        bpdn_remove_measurement(s0, A2, y2, 21)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_remove_matches_cold_n32(seed):
    g = np.random.default_rng(seed)
    A, _, y, tau = random_lasso(g, 24, 32, K=5)
    s0, _ = solve_bpdn(A, y, tau)
    r = int(g.integers(24))
    s1, _ = bpdn_remove_measurement(s0, A, y, r)
    keep = np.arange(24) != r
    ref, _ = solve_bpdn(A[keep], y[keep], tau)
    assert np.abs(s1.x - ref.x).max() <= 1e-7


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ds_add_matches_cold_n6(seed):
    g = np.random.default_rng(seed)
    A, _, y, tau = random_lasso(g, 8, 6, K=2)
    d0, _ = solve_ds(A, y, tau)
    b = g.standard_normal(6) / np.sqrt(8)
    w = float(g.standard_normal())
    d1, _ = ds_add_measurement(d0, A, y, b, w)
    ref, _ = solve_ds(np.vstack([A, b]), np.append(y, w), tau)
    assert np.abs(d1.x - ref.x).max() <= 1e-7


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_epsilon_replay_and_monotone(seed):
    g = np.random.default_rng(seed)
    A, x, y, tau = random_lasso(g, 16, 32, lam=0.05)
    s0, _ = solve_bpdn(A, y, tau)
    b = new_row(g, 32, 16)
    w = float(b @ x + 0.5 * g.standard_normal())
    op = CountingMatrix(A)
    s1, tr = bpdn_add_measurement(s0, op, y, b, w)
    eps = np.array(tr.epsilons)
    assert eps[0] == 0.0 and eps[-1] == 1.0
    assert np.all(np.diff(eps) > 0)
    assert np.abs(np.array(replay_epsilon(tr))[:-1] - eps[:-1]).max() <= 1e-12
    assert op.nprod == tr.nprod == len(tr.steps)
    assert bpdn_kkt(np.vstack([A, b]), np.append(y, w), tau, s1.x).passed


def test_steps_grow_as_tau_shrinks():
    means = []
    for lam in (0.5, 0.1, 0.01):
        cfg = ExperimentConfig("dynamic-seq-bpdn", n=128, m=64, K=12, lam=lam, trials=30, seed=5)
        means.append(run_experiment(cfg).aggregates["warm_steps_mean"])
    assert means[0] < means[1] < means[2]


@pytest.mark.slow
def test_desk_table_row():
    cfg = ExperimentConfig("dynamic-seq-bpdn", n=256, m=128, K=25, lam=0.5, trials=100, seed=11)
    a = run_experiment(cfg).aggregates
    assert a["flagged"] == 0
    assert a["warm_nprod_mean"] < 10
    assert 10 * a["warm_nprod_mean"] <= a["cold_nprod_mean"]
