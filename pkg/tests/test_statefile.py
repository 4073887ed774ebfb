import numpy as np
import pytest

from l1homotopy.bpdn import bpdn_kkt, solve_bpdn
from l1homotopy.dantzig import ds_kkt, solve_ds
from l1homotopy.dynamic_x import update_bpdn_signal, update_ds_signal
from l1homotopy.errors import FormatError
from l1homotopy.statefile import load_state, pack_sections, save_state, unpack_sections

from helpers import random_lasso


def test_sections_round_trip():
    sec = {"a": np.arange(6.0).reshape(2, 3), "empty": np.zeros((1, 1)), "v": np.array([[1.5, -2.0]])}
    out = unpack_sections(pack_sections(sec))
    assert set(out) == set(sec)
    for k in sec:
        np.testing.assert_array_equal(out[k], sec[k])


def test_bad_containers():
    with pytest.raises(FormatError):
        unpack_sections(b"NOTSTATE")
    buf = pack_sections({"a": np.ones((2, 2))})
    with pytest.raises(FormatError):
        unpack_sections(buf[:-3])
    with pytest.raises(FormatError):
        unpack_sections(buf[:12])
    with pytest.raises(FormatError):
        pack_sections({"x" * 17: np.ones((1, 1))})


def test_bpdn_state_resumes(tmp_path):
    g = np.random.default_rng(0)
    A, x, y, tau = random_lasso(g, 20, 40, K=4, lam=0.2)
    st, _ = solve_bpdn(A, y, tau)
    save_state(tmp_path / "s", A, y, st)
    kind, A2, y2, st2 = load_state(tmp_path / "s")
    assert kind == "bpdn"
    np.testing.assert_array_equal(A2, A)
    np.testing.assert_array_equal(st2.x, st.x)
    assert list(st2.active.indices) == list(st.active.indices)
    y_new = y + 0.05 * g.standard_normal(20)
    a, _ = update_bpdn_signal(st, A, y, y_new)
    b, _ = update_bpdn_signal(st2, A2, y2, y_new)
    assert np.abs(a.x - b.x).max() <= 1e-12
    assert bpdn_kkt(A, y_new, tau, b.x).passed


def test_ds_state_resumes(tmp_path):
    g = np.random.default_rng(1)
    A, x, y, tau = random_lasso(g, 20, 30, K=3, lam=0.3)
    st, _ = solve_ds(A, y, tau)
    save_state(tmp_path / "s", A, y, st)
    kind, A2, y2, st2 = load_state(tmp_path / "s")
    assert kind == "ds"
    assert st2.Gx == st.Gx and st2.Gl == st.Gl
    np.testing.assert_array_equal(st2.lam, st.lam)
    y_new = y * 1.1
    a, _ = update_ds_signal(st, A, y, y_new)
    b, _ = update_ds_signal(st2, A2, y2, y_new)
    assert np.abs(a.x - b.x).max() <= 1e-12
    assert ds_kkt(A, y_new, tau, b.x, b.lam).passed


def test_empty_support_state(tmp_path):
    A = np.eye(3)
    y = np.array([1.0, -0.5, 0.2])
    st, _ = solve_bpdn(A, y, 2.0)
    save_state(tmp_path / "s", A, y, st)
    _, _, _, st2 = load_state(tmp_path / "s")
    assert len(st2.active) == 0 and not st2.x.any()


def test_missing_sections(tmp_path):
    p = tmp_path / "s"
    p.write_bytes(pack_sections({"kind": np.zeros((1, 1))}))
    with pytest.raises(FormatError):
        load_state(p)
    p.write_bytes(pack_sections({"kind": np.zeros((1, 1)), "A": np.eye(2), "y": np.ones((1, 3)),
                                 "x": np.ones((1, 2)), "tau": np.ones((1, 1))}))
    with pytest.raises(FormatError):
        load_state(p)
