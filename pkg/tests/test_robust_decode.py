import numpy as np
import pytest

from l1homotopy.errors import ConfigError, RankDeficient
from l1homotopy.oracle import bpdn_brute
from l1homotopy.problems import orthonormal_matrix
from l1homotopy.robust_decode import (decode_message, null_projector, projector_append,
                                      robust_add_measurements, robust_init, robust_kkt)


def instance(seed, n, m, p, K, sigma=0.01, rate=0.1):
    g = np.random.default_rng(seed)
    F = orthonormal_matrix(m + p, n, g)
    x = g.standard_normal(n)
    s = F @ x
    s[g.choice(m, K, replace=False)] = 0.0
    s[m + np.flatnonzero(g.random(p) < rate)] = 0.0
    return F, x, s + sigma * g.standard_normal(m + p)


def test_projector_examples():
    P, _ = null_projector([[1.0], [0.0]])
    np.testing.assert_allclose(P, [[0.0, 0.0], [0.0, 1.0]], atol=1e-15)
    F = orthonormal_matrix(12, 4, 0)
    P, _ = null_projector(F)
    np.testing.assert_allclose(P, np.eye(12) - F @ F.T, atol=1e-12)
    assert np.abs(P @ F).max() <= 1e-9
    assert np.abs(P @ P - P).max() <= 1e-9
    with pytest.raises(RankDeficient):
        null_projector(np.ones((4, 2)))


def test_projector_append_matches_recompute():
    g = np.random.default_rng(1)
    F = g.standard_normal((10, 4))
    P, K = null_projector(F)
    for _ in range(15):
        b = g.standard_normal(4)
        P, K = projector_append(P, K, F, b)
        F = np.vstack([F, b])
        ref, _ = null_projector(F)
        assert np.abs(P - ref).max() <= 1e-9
        assert np.abs(P @ F).max() <= 1e-9
        assert np.abs(P @ P - P).max() <= 1e-9


def test_decode_message_examples():
    F, x, _ = instance(2, 5, 15, 0, 0, sigma=0.0)
    st, _ = robust_init(F, F @ x, 0.01)
    np.testing.assert_allclose(decode_message(st), x, atol=1e-10)
    st.c = st.s.copy()
    np.testing.assert_allclose(decode_message(st), 0.0, atol=1e-12)


def test_noise_only_gives_zero_error():
    g = np.random.default_rng(3)
    F = orthonormal_matrix(20, 5, g)
    x = g.standard_normal(5)
    s = F @ x + 0.01 * g.standard_normal(20)
    P, _ = null_projector(F)
    tau = 1.01 * float(np.abs(P @ s).max())
    st, _ = robust_init(F, s, tau)
    assert not st.c.any()
    np.testing.assert_allclose(decode_message(st), np.linalg.lstsq(F, s, rcond=None)[0], atol=1e-10)


def test_single_gross_error():
    g = np.random.default_rng(4)
    F = orthonormal_matrix(10, 2, g)
    x = g.standard_normal(2)
    s = F @ x
    s[5] += 4.0
    P, _ = null_projector(F)
    # the error column dominates its row of P, so the support is exact
    assert np.abs(np.delete(P[5], 5)).max() < P[5, 5]
    st, _ = robust_init(F, s, 1e-3)
    assert list(np.flatnonzero(st.c)) == [5]
    ref = bpdn_brute(P, P @ s, 1e-3)
    assert np.abs(st.c - ref).max() <= 1e-7


@pytest.mark.parametrize("seed", range(100))
def test_warm_matches_cold(seed):
    p = (1, 5)[seed % 2]
    F, _, s = instance(500 + seed, 32, 96, p, 19)
    st, _ = robust_init(F[:96], s[:96], 0.01)
    warm, tr = robust_add_measurements(st, F[96:], s[96:])
    cold, _ = robust_init(F, s, 0.01)
    assert np.abs(warm.c - cold.c).max() <= 1e-7
    assert robust_kkt(warm).passed and robust_kkt(cold).passed
    assert np.all(np.diff(tr.epsilons) >= 0)
    assert len(warm.support) <= warm.rows - warm.n
    assert np.abs(warm.P @ warm.F).max() <= 1e-9


def test_lucky_breakdown_on_clean_rows():
    F, x, _ = instance(6, 6, 24, 3, 0, sigma=0.0)
    s = F @ x
    s[[2, 7]] += 3.0
    st, _ = robust_init(F[:24], s[:24], 1e-4)
    warm, tr = robust_add_measurements(st, F[24:], s[24:])
    assert tr.lucky
    # the estimate only moves by the tau-sized bias of the old fit
    assert np.abs(decode_message(warm) - decode_message(st)).max() <= 1e-4
    assert np.abs(decode_message(warm) - x).max() <= 1e-3


def test_input_errors():
    F, _, s = instance(7, 4, 12, 0, 0)
    with pytest.raises(ConfigError):
        robust_init(F[:4], s[:4], 0.01)
    with pytest.raises(ConfigError):
        robust_init(F, s[:5], 0.01)
    st, _ = robust_init(F, s, 0.01)
    with pytest.raises(ConfigError):
        robust_add_measurements(st, np.ones((1, 3)), [1.0])


@pytest.mark.slow
def test_block_trend_desk():
    warm = {}
    for p in (1, 10):
        ws, cs = [], []
        for seed in range(20):
            F, _, s = instance(900 + seed, 75, 150, p, 30)
            st, _ = robust_init(F[:150], s[:150], 0.01)
            _, tr = robust_add_measurements(st, F[150:], s[150:])
            _, trc = robust_init(F, s, 0.01)
            ws.append(len(tr.steps))
            cs.append(len(trc.steps))
        warm[p] = np.mean(ws)
        assert warm[p] < np.mean(cs)
    assert warm[10] < 10 * warm[1]


@pytest.mark.slow
def test_full_scale_decoding_error():
    # full-scale setup; the decoding error is expected at the noise floor
    errs = []
    for seed in range(5):
        F, x, s = instance(1000 + seed, 150, 300, 0, 60, rate=0.0)
        st, _ = robust_init(F, s, 0.01)
        errs.append(np.linalg.norm(decode_message(st) - x) / np.linalg.norm(x))
    assert max(errs) <= 0.05
