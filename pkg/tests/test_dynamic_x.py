import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_lasso
from l1homotopy.bench import ExperimentConfig, run_experiment
from l1homotopy.bpdn import bpdn_kkt, solve_bpdn
from l1homotopy.dantzig import ds_kkt, solve_ds
from l1homotopy.dynamic_x import update_bpdn_signal, update_ds_signal
from l1homotopy.errors import StaleWarmStart
from l1homotopy.homotopy import SHRINK, TERMINAL
from l1homotopy.operators import CountingMatrix


def new_rhs(g, A, y, scale=0.05):
    return y + scale * g.standard_normal(y.size)


def test_same_rhs_is_a_no_op():
    g = np.random.default_rng(0)
    A, _, y, tau = random_lasso(g, 20, 40)
    s0, _ = solve_bpdn(A, y, tau)
    s1, tr = update_bpdn_signal(s0, A, y, y.copy())
    assert [ev.kind for ev in tr.steps] == [TERMINAL]
    assert tr.final_epsilon == 1.0 and tr.nprod == 0
    assert np.array_equal(s1.x, s0.x)
    d0, _ = solve_ds(A, y, tau)
    d1, tr = update_ds_signal(d0, A, y, y.copy())
    assert np.array_equal(d1.x, d0.x) and np.array_equal(d1.lam, d0.lam)


def test_diagonal_shrink_path(backend):
    A = np.eye(2)
    y0, y1 = np.array([2.0, 0.0]), np.array([0.2, 0.0])
    s0, _ = solve_bpdn(A, y0, 0.5)
    np.testing.assert_allclose(s0.x, [1.5, 0.0])
    s1, tr = update_bpdn_signal(s0, A, y0, y1)
    np.testing.assert_allclose(s1.x, [0.0, 0.0], atol=1e-15)
    events = [ev for ev in tr.steps if ev.kind != TERMINAL]
    assert [(ev.kind, ev.gamma) for ev in events] == [(SHRINK, 0)]


def test_ds_diagonal_matches_bpdn(backend):
    A = np.eye(4)
    y0 = np.array([2.0, -1.0, 0.3, 0.0])
    y1 = np.array([0.2, -1.4, 0.9, 0.1])
    tau = 0.5
    d0, _ = solve_ds(A, y0, tau)
    d1, _ = update_ds_signal(d0, A, y0, y1)
    b1, _ = update_bpdn_signal(solve_bpdn(A, y0, tau)[0], A, y0, y1)
    np.testing.assert_allclose(d1.x, b1.x, atol=1e-12)
    assert ds_kkt(A, y1, tau, d1.x, d1.lam).passed


def test_stale_state_rejected():
    g = np.random.default_rng(1)
    A, _, y, tau = random_lasso(g, 20, 40)
    s0, _ = solve_bpdn(A, y, tau)
    with pytest.raises(StaleWarmStart):
        update_bpdn_signal(s0, A, y + 1.0, y)
    d0, _ = solve_ds(A, y, tau)
    with pytest.raises(StaleWarmStart):
        update_ds_signal(d0, A, y + 1.0, y)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ds_warm_matches_cold_n6(seed):
    g = np.random.default_rng(seed)
    A, _, y, tau = random_lasso(g, 8, 6, K=2)
    y1 = new_rhs(g, A, y, 0.3)
    d0, _ = solve_ds(A, y, tau)
    d1, _ = update_ds_signal(d0, A, y, y1)
    ref, _ = solve_ds(A, y1, tau)
    assert np.abs(d1.x - ref.x).max() <= 1e-7


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bpdn_path_one_change_per_step(seed):
    g = np.random.default_rng(seed)
    A, _, y, tau = random_lasso(g, 16, 32, lam=0.1)
    y1 = new_rhs(g, A, y, 0.2)
    s0, _ = solve_bpdn(A, y, tau)
    op = CountingMatrix(A)
    s1, tr = update_bpdn_signal(s0, op, y, y1)
    eps = np.array(tr.epsilons)
    assert np.all(np.diff(eps) > 0) and eps[-1] == 1.0
    assert op.nprod == tr.nprod
    assert tr.nprod == 1 + len(tr.steps)
    # supports on consecutive segments differ in exactly one index
    sups = []
    for a, b in zip(eps[:-1], eps[1:]):
        mid = 0.5 * (a + b)
        x = solve_bpdn(A, (1 - mid) * y + mid * y1, tau)[0].x
        sups.append(frozenset(np.flatnonzero(x)))
    for s, t in zip(sups[:-1], sups[1:]):
        assert len(s ^ t) == 1
    # optimality at every critical point with the blended right-hand side
    for e, ev in zip(eps[1:], tr.steps):
        if ev.kind == TERMINAL:
            continue
        x = solve_bpdn(A, (1 - e) * y + e * y1, tau)[0].x
        assert bpdn_kkt(A, (1 - e) * y + e * y1, tau, x).passed
    assert bpdn_kkt(A, y1, tau, s1.x).passed


@pytest.mark.slow
def test_desk_table_row():
    cfg = ExperimentConfig("dynamic-x-bpdn", n=256, m=128, K=25, lam=0.1, trials=100, seed=11)
    a = run_experiment(cfg).aggregates
    assert a["flagged"] == 0
    assert a["warm_nprod_mean"] <= 4 * 12.9
    assert 5 * a["warm_nprod_mean"] <= a["cold_nprod_mean"]
