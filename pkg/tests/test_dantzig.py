import numpy as np
from hypothesis import given, settings, strategies as st

from helpers import random_lasso
from l1homotopy.dantzig import ds_kkt, solve_ds
from l1homotopy.operators import CountingMatrix
from l1homotopy.oracle import ds_brute


def test_large_tau_gives_zero():
    g = np.random.default_rng(0)
    A, _, y, _ = random_lasso(g, 10, 20)
    tau = float(np.abs(A.T @ y).max())
    s, _ = solve_ds(A, y, tau)
    assert not s.x.any() and not s.lam.any()
    assert ds_kkt(A, y, tau, np.zeros(20), np.zeros(20)).passed


def test_identity_soft_threshold(backend):
    y = np.array([2.0, -0.3, 0.9, -1.7, 0.1])
    tau = 0.5
    s, _ = solve_ds(np.eye(5), y, tau)
    x = np.sign(y) * np.maximum(np.abs(y) - tau, 0)
    np.testing.assert_allclose(s.x, x, atol=1e-12)
    on = x != 0
    np.testing.assert_allclose(s.lam[on], -np.sign(x[on]), atol=1e-12)
    assert not s.lam[~on].any()


def test_kkt_detects_dual_violation():
    g = np.random.default_rng(1)
    A, _, y, tau = random_lasso(g, 20, 30, lam=0.2)
    s, _ = solve_ds(A, y, tau)
    assert ds_kkt(A, y, tau, s.x, s.lam).passed
    Phi = A.T @ A
    off = [j for j in range(30) if s.lam[j] == 0][0]
    lam = s.lam.copy()
    lam[off] += 2.0 / np.linalg.norm(Phi, 2)
    rep = ds_kkt(A, y, tau, s.x, lam)
    assert not rep.passed


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(3, 8), st.integers(0, 2**32 - 1))
def test_matches_oracle(n, m, seed):
    g = np.random.default_rng(seed)
    A = g.standard_normal((m, n))
    y = g.standard_normal(m)
    tau = g.uniform(0.05, 0.95) * float(np.abs(A.T @ y).max())
    s, _ = solve_ds(A, y, tau)
    x, _ = ds_brute(A, y, tau)
    assert np.abs(s.x - x).max() <= 1e-7
    assert ds_kkt(A, y, tau, s.x, s.lam).passed


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_support_structure(seed):
    g = np.random.default_rng(seed)
    A, _, y, tau = random_lasso(g, 24, 40, lam=0.1)
    op = CountingMatrix(A)
    s, tr = solve_ds(op, y, tau)
    assert len(s.Gx) == len(s.Gl)
    assert sorted(s.Gx) == sorted(np.flatnonzero(s.x))
    assert sorted(s.Gl) == sorted(np.flatnonzero(s.lam))
    p = A.T @ (A @ s.x - y)
    active = np.flatnonzero(np.abs(np.abs(p) - tau) <= 1e-9 * tau)
    assert set(s.Gl) <= set(active)
    assert op.nprod == tr.nprod
    assert np.all(np.diff(tr.params) <= 0)
