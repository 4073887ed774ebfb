"""Pure-Python (numpy) versions of the hot kernels.

Must stay behaviourally identical to ``_ckernels.pyx``; the test-suite
runs both through the same cases.
"""
import math

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NotPositiveDefinite

INF = math.inf


def chol_append(L, col, diag, pivot_tol):
    k = L.shape[0]
    out = np.zeros((k + 1, k + 1))
    if k:
        r = solve_triangular(L, col, lower=True, check_finite=False)
        out[:k, :k] = L
        out[k, :k] = r
        pivot = diag - r @ r
    else:
        pivot = diag
    if not pivot > pivot_tol:
        raise NotPositiveDefinite(f"pivot {pivot:.3e} <= {pivot_tol:.3e}")
    out[k, k] = math.sqrt(pivot)
    return out


def chol_delete(L, pos):
    k = L.shape[0]
    R = np.delete(L, pos, axis=0)
    # R is (k-1) x k with one super-diagonal from row ``pos`` on;
    # rotate column pairs to restore lower-triangular form.
    for i in range(pos, k - 1):
        a = R[i, i]
        b = R[i, i + 1]
        if b == 0.0:
            continue
        r = math.hypot(a, b)
        c = a / r
        s = b / r
        ci = R[i:, i].copy()
        cj = R[i:, i + 1]
        R[i:, i] = c * ci + s * cj
        R[i:, i + 1] = -s * ci + c * cj
        R[i, i + 1] = 0.0
        if R[i, i] < 0.0:
            R[i:, i] = -R[i:, i]
    return np.ascontiguousarray(R[:, : k - 1])


def chol_rank1(L, v, sign):
    """Factor of ``L L^T + sign * v v^T``; returns a new array."""
    L = L.copy()
    x = np.array(v, dtype=float)
    k = L.shape[0]
    for j in range(k):
        ljj = L[j, j]
        r2 = ljj * ljj + sign * x[j] * x[j]
        if not r2 > 0.0:
            raise NotPositiveDefinite("rank-1 downdate lost positive definiteness")
        r = math.sqrt(r2)
        c = r / ljj
        s = x[j] / ljj
        L[j, j] = r
        if j + 1 < k:
            L[j + 1 :, j] = (L[j + 1 :, j] + sign * s * x[j + 1 :]) / c
            x[j + 1 :] = c * x[j + 1 :] - s * L[j + 1 :, j]
    return L


def chol_solve(L, b):
    if L.shape[0] == 0:
        return np.zeros(0)
    t = solve_triangular(L, b, lower=True, check_finite=False)
    return solve_triangular(L, t, lower=True, trans="T", check_finite=False)


def _pick(ratios, idx, tie_tol):
    best = ratios.min()
    tied = ratios <= best + tie_tol
    pos = np.flatnonzero(tied)
    return best, pos[np.argmin(idx[pos])]


def shrink_scan(values, directions, idx, tol):
    if idx.size == 0:
        return INF, -1
    v = values[idx]
    d = directions[idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = -v / d
    ratio[~(ratio > tol)] = INF
    ratio[d == 0.0] = INF
    if not np.isfinite(ratio).any():
        return INF, -1
    theta, pos = _pick(ratio, idx, 1e-12)
    return float(theta), int(idx[pos])


def activation_scan(p, d, bound, idx, tol):
    if idx.size == 0:
        return INF, -1, 0
    pj = p[idx]
    dj = d[idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        up = (bound - pj) / dj
        dn = (bound + pj) / -dj
    up[~(up > tol) | ~(dj > 0.0)] = INF
    dn[~(dn > tol) | ~(dj < 0.0)] = INF
    both = np.minimum(up, dn)
    if not np.isfinite(both).any():
        return INF, -1, 0
    theta, pos = _pick(both, idx, 1e-12)
    sign = 1 if up[pos] <= dn[pos] else -1
    return float(theta), int(idx[pos]), sign


def lars_scan(p, d, bound, idx, tol):
    """Smallest t > tol with p_j + t d_j = +-(bound - t)."""
    if idx.size == 0:
        return INF, -1, 0
    pj = p[idx]
    dj = d[idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        up = (bound - pj) / (1.0 + dj)
        dn = (bound + pj) / (1.0 - dj)
    up[~(up > tol) | ~(1.0 + dj > 0.0)] = INF
    dn[~(dn > tol) | ~(1.0 - dj > 0.0)] = INF
    both = np.minimum(up, dn)
    if not np.isfinite(both).any():
        return INF, -1, 0
    theta, pos = _pick(both, idx, 1e-12)
    sign = 1 if up[pos] <= dn[pos] else -1
    return float(theta), int(idx[pos]), sign
