"""Backend selection for the hot kernels.

The compiled module is used when it was built; setting ``L1H_PURE_PYTHON=1``
forces the numpy fallback (handy for debugging and for the backend benchmark).
"""
import os

import numpy as np

from . import _pykernels

if os.environ.get("L1H_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def available_backends():
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out


def use_backend(name):
    """Switch the active kernel module at runtime; returns the previous name."""
    global _impl, BACKEND
    mods = available_backends()
    if name not in mods:
        raise ValueError(f"backend {name!r} not available")
    prev = BACKEND
    _impl = mods[name]
    BACKEND = name
    return prev


def _f(a):
    return np.asarray(a, dtype=np.float64)


def _i(a):
    return np.asarray(a, dtype=np.int64)


def chol_append(L, col, diag, pivot_tol):
    return _impl.chol_append(_f(L), _f(col), float(diag), float(pivot_tol))


def chol_delete(L, pos):
    return _impl.chol_delete(_f(L), int(pos))


def chol_rank1(L, v, sign):
    return _impl.chol_rank1(_f(L), _f(v), float(sign))


def chol_solve(L, b):
    if L.shape[0] == 0:
        return np.zeros(0)
    return _impl.chol_solve(_f(L), _f(b))


def shrink_scan(values, directions, idx, tol):
    return _impl.shrink_scan(_f(values), _f(directions), _i(idx), float(tol))


def activation_scan(p, d, bound, idx, tol):
    return _impl.activation_scan(_f(p), _f(d), float(bound), _i(idx), float(tol))


def lars_scan(p, d, bound, idx, tol):
    return _impl.lars_scan(_f(p), _f(d), float(bound), _i(idx), float(tol))
