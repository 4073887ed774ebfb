# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: Cholesky column add/delete, rank-1 update and
the step-size scans run once per homotopy step.

Mirrors ``_pykernels.py`` exactly (same tie-breaking, same tolerances).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot, INFINITY
from scipy.linalg.cython_blas cimport dtrsv

from .errors import NotPositiveDefinite

cnp.import_array()

ctypedef cnp.float64_t f64
ctypedef cnp.int64_t i64

cdef double TIE = 1e-12


def chol_append(const f64[:, :] L, const f64[:] col, double diag, double pivot_tol):
    cdef Py_ssize_t k = L.shape[0]
    cdef Py_ssize_t i, j
    cdef double s, pivot
    out_arr = np.zeros((k + 1, k + 1))
    cdef f64[:, :] out = out_arr
    for i in range(k):
        for j in range(i + 1):
            out[i, j] = L[i, j]
    pivot = diag
    for i in range(k):
        s = col[i]
        for j in range(i):
            s -= out[i, j] * out[k, j]
        s /= out[i, i]
        out[k, i] = s
        pivot -= s * s
    if not pivot > pivot_tol:
        raise NotPositiveDefinite(f"pivot {pivot:.3e} <= {pivot_tol:.3e}")
    out[k, k] = sqrt(pivot)
    return out_arr


def chol_delete(const f64[:, :] L, Py_ssize_t pos):
    cdef Py_ssize_t k = L.shape[0]
    cdef Py_ssize_t i, j, r
    cdef double a, b, h, c, s, u, v
    R_arr = np.zeros((k - 1, k))
    cdef f64[:, :] R = R_arr
    for i in range(k - 1):
        r = i if i < pos else i + 1
        for j in range(r + 1):
            R[i, j] = L[r, j]
    for i in range(pos, k - 1):
        a = R[i, i]
        b = R[i, i + 1]
        if b == 0.0:
            continue
        h = hypot(a, b)
        c = a / h
        s = b / h
        for r in range(i, k - 1):
            u = R[r, i]
            v = R[r, i + 1]
            R[r, i] = c * u + s * v
            R[r, i + 1] = -s * u + c * v
        R[i, i + 1] = 0.0
        if R[i, i] < 0.0:
            for r in range(i, k - 1):
                R[r, i] = -R[r, i]
    return np.ascontiguousarray(R_arr[:, : k - 1])


def chol_rank1(const f64[:, :] L0, const f64[:] v, double sign):
    cdef Py_ssize_t k = L0.shape[0]
    cdef Py_ssize_t i, j
    cdef double ljj, r2, r, c, s
    L_arr = np.array(L0, dtype=np.float64, copy=True)
    x_arr = np.array(v, dtype=np.float64, copy=True)
    cdef f64[:, :] L = L_arr
    cdef f64[:] x = x_arr
    for j in range(k):
        ljj = L[j, j]
        r2 = ljj * ljj + sign * x[j] * x[j]
        if not r2 > 0.0:
            raise NotPositiveDefinite("rank-1 downdate lost positive definiteness")
        r = sqrt(r2)
        c = r / ljj
        s = x[j] / ljj
        L[j, j] = r
        for i in range(j + 1, k):
            L[i, j] = (L[i, j] + sign * s * x[i]) / c
            x[i] = c * x[i] - s * L[i, j]
    return L_arr


def chol_solve(L, b):
    # two BLAS triangular sweeps; row-major L is the upper factor L^T to BLAS
    cdef f64[:, ::1] Lc = np.ascontiguousarray(L, dtype=np.float64)
    x_arr = np.array(b, dtype=np.float64)
    cdef f64[::1] x = x_arr
    cdef int k = Lc.shape[0], inc = 1
    if k == 0:
        return x_arr
    dtrsv(b"U", b"T", b"N", &k, &Lc[0, 0], &k, &x[0], &inc)
    dtrsv(b"U", b"N", b"N", &k, &Lc[0, 0], &k, &x[0], &inc)
    return x_arr


def shrink_scan(const f64[:] values, const f64[:] directions, const i64[:] idx, double tol):
    cdef Py_ssize_t t, n = idx.shape[0]
    cdef i64 j, gamma = -1
    cdef double d, ratio, best = INFINITY
    for t in range(n):
        j = idx[t]
        d = directions[j]
        if d == 0.0:
            continue
        ratio = -values[j] / d
        if ratio > tol and ratio < best:
            best = ratio
    if best == INFINITY:
        return INFINITY, -1
    for t in range(n):
        j = idx[t]
        d = directions[j]
        if d == 0.0:
            continue
        ratio = -values[j] / d
        if ratio > tol and ratio <= best + TIE and (gamma < 0 or j < gamma):
            gamma = j
    return best, int(gamma)


cdef inline void _two_sided(double p, double d, double bound, double tol, bint lars,
                            double* theta, int* sign) noexcept nogil:
    cdef double up = INFINITY, dn = INFINITY, q
    if lars:
        if 1.0 + d > 0.0:
            q = (bound - p) / (1.0 + d)
            if q > tol:
                up = q
        if 1.0 - d > 0.0:
            q = (bound + p) / (1.0 - d)
            if q > tol:
                dn = q
    else:
        if d > 0.0:
            q = (bound - p) / d
            if q > tol:
                up = q
        elif d < 0.0:
            q = (bound + p) / -d
            if q > tol:
                dn = q
    if up <= dn:
        theta[0] = up
        sign[0] = 1
    else:
        theta[0] = dn
        sign[0] = -1


cdef tuple _scan(const f64[:] p, const f64[:] d, double bound, const i64[:] idx,
                 double tol, bint lars):
    cdef Py_ssize_t t, n = idx.shape[0]
    cdef i64 j, gamma = -1
    cdef double th, best = INFINITY
    cdef int sg, best_sign = 0
    for t in range(n):
        j = idx[t]
        _two_sided(p[j], d[j], bound, tol, lars, &th, &sg)
        if th < best:
            best = th
    if best == INFINITY:
        return INFINITY, -1, 0
    for t in range(n):
        j = idx[t]
        _two_sided(p[j], d[j], bound, tol, lars, &th, &sg)
        if th <= best + TIE and (gamma < 0 or j < gamma):
            gamma = j
            best_sign = sg
    return best, int(gamma), best_sign


def activation_scan(const f64[:] p, const f64[:] d, double bound, const i64[:] idx, double tol):
    return _scan(p, d, bound, idx, tol, False)


def lars_scan(const f64[:] p, const f64[:] d, double bound, const i64[:] idx, double tol):
    return _scan(p, d, bound, idx, tol, True)
