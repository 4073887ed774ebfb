"""Brute-force reference solvers for tiny instances.

These enumerate supports and sign patterns directly and check optimality
with their own residual tests; nothing here touches the homotopy code.
"""
import itertools

import numpy as np

from .errors import NoCertifiedSolution

MAX_BPDN_N = 12
MAX_DS_N = 6
MAX_L1_N = 6
MAX_L1_M = 14


def _sign_patterns(k):
    if k == 0:
        return np.zeros((0, 1))
    return np.array(list(itertools.product((-1.0, 1.0), repeat=k))).T


def bpdn_brute(A, y, tau, tol=1e-9):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    m, n = A.shape
    if n > MAX_BPDN_N:
        raise ValueError(f"n = {n} exceeds the oracle limit {MAX_BPDN_N}")
    h = A.T @ y
    if np.abs(h).max(initial=0.0) <= tau:
        return np.zeros(n)
    for k in range(1, min(n, m) + 1):
        for S in itertools.combinations(range(n), k):
            S = list(S)
            As = A[:, S]
            G = As.T @ As
            try:
                W = np.linalg.inv(G)
            except np.linalg.LinAlgError:
                continue
            if np.linalg.cond(G) > 1e12:
                continue
            Z = _sign_patterns(k)
            X = (W @ h[S])[:, None] - tau * (W @ Z)
            good = np.all(np.sign(X) == Z, axis=0)
            for c in np.flatnonzero(good):
                x = np.zeros(n)
                x[S] = X[:, c]
                p = A.T @ (A @ x - y)
                off = np.ones(n, dtype=bool)
                off[S] = False
                if (np.abs(p[S] + tau * Z[:, c]).max() <= tol * max(tau, 1.0)
                        and np.abs(p[off]).max(initial=0.0) <= tau * (1 + tol)):
                    return x
    raise NoCertifiedSolution("no support/sign pattern passes the optimality test")


def ds_brute(A, y, tau, tol=1e-9):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    m, n = A.shape
    if n > MAX_DS_N:
        raise ValueError(f"n = {n} exceeds the oracle limit {MAX_DS_N}")
    Phi = A.T @ A
    h = A.T @ y
    if np.abs(h).max(initial=0.0) <= tau:
        return np.zeros(n), np.zeros(n)
    for k in range(1, min(n, m) + 1):
        Z = _sign_patterns(k)
        for Sx in itertools.combinations(range(n), k):
            Sx = list(Sx)
            for Sl in itertools.combinations(range(n), k):
                Sl = list(Sl)
                M = Phi[np.ix_(Sl, Sx)]
                if np.linalg.cond(M) > 1e12:
                    continue
                N = np.linalg.inv(M)
                X = N @ (h[Sl][:, None] + tau * Z)
                for c in range(Z.shape[1]):
                    xs = X[:, c]
                    if np.any(xs == 0):
                        continue
                    zx = np.sign(xs)
                    ls = -N.T @ zx
                    if not np.all(np.sign(ls) == Z[:, c]):
                        continue
                    x = np.zeros(n)
                    x[Sx] = xs
                    lam = np.zeros(n)
                    lam[Sl] = ls
                    p = Phi @ x - h
                    a = Phi @ lam
                    offl = np.ones(n, dtype=bool)
                    offl[Sl] = False
                    offx = np.ones(n, dtype=bool)
                    offx[Sx] = False
                    if (np.abs(p[offl]).max(initial=0.0) <= tau * (1 + tol)
                            and np.abs(a[offx]).max(initial=0.0) <= 1 + tol):
                        return x, lam
    raise NoCertifiedSolution("no support pair passes the optimality test")


def l1_regression_brute(A, y):
    """Minimizer of ||A x - y||_1 over the vertices given by n-row subsets."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    m, n = A.shape
    if n > MAX_L1_N or m > MAX_L1_M:
        raise ValueError(f"({m}, {n}) exceeds the oracle limits ({MAX_L1_M}, {MAX_L1_N})")
    if m < n:
        raise ValueError("need at least as many rows as columns")
    best = None
    best_val = np.inf
    for S in itertools.combinations(range(m), n):
        S = list(S)
        As = A[S]
        if np.linalg.cond(As) > 1e12:
            continue
        x = np.linalg.solve(As, y[S])
        val = np.abs(A @ x - y).sum()
        if val < best_val - 1e-12 * max(1.0, best_val if np.isfinite(best_val) else 1.0):
            best, best_val = x, val
    if best is None:
        raise NoCertifiedSolution("every row subset is singular")
    return best
