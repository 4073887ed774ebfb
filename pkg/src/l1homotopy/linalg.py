"""Dense linear algebra used by the homotopy solvers.

Cholesky factors of Gram submatrices with one-column add/remove updates,
an explicitly maintained inverse for square non-symmetric systems, and the
recursive least-squares row update.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NotPositiveDefinite, SingularCrossGram

EPS = np.finfo(float).eps


def pivot_tolerance(dim, maxdiag):
    return max(dim, 1) * EPS * maxdiag


@dataclass
class SpdFactor:
    """Lower-triangular ``L`` with ``L @ L.T`` equal to the Gram submatrix over ``indices``."""

    L: np.ndarray
    indices: list = field(default_factory=list)
    maxdiag: float = 0.0

    @property
    def dim(self):
        return self.L.shape[0]

    def solve(self, b):
        return kernels.chol_solve(self.L, b)

    def gram(self):
        return self.L @ self.L.T


def spd_factor(G, indices=None):
    G = np.atleast_2d(np.asarray(G, dtype=float))
    k = G.shape[0]
    if G.shape != (k, k):
        raise ValueError("Gram matrix must be square")
    if indices is None:
        indices = list(range(k))
    if k == 0:
        return SpdFactor(np.zeros((0, 0)), list(indices), 0.0)
    scale = max(np.abs(G).max(), 1e-300)
    if np.abs(G - G.T).max() > 1e-12 * scale:
        raise ValueError("Gram matrix is not symmetric")
    maxdiag = float(np.max(np.diag(G)))
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Cholesky factorization failed") from None
    tol = pivot_tolerance(k, maxdiag)
    if not np.all(np.diag(L) ** 2 > tol):
        raise NotPositiveDefinite("pivot below tolerance")
    return SpdFactor(np.ascontiguousarray(L), list(indices), maxdiag)


def factor_add_index(f, col, diag, index=None):
    col = np.asarray(col, dtype=float).reshape(-1)
    if col.shape[0] != f.dim:
        raise ValueError("new Gram column has wrong length")
    maxdiag = max(f.maxdiag, float(diag))
    L = kernels.chol_append(f.L, col, diag, pivot_tolerance(f.dim + 1, maxdiag))
    if index is None:
        index = len(f.indices)
    return SpdFactor(L, f.indices + [index], maxdiag)


def factor_remove_index(f, position):
    if not 0 <= position < f.dim:
        raise IndexError("position out of range")
    L = kernels.chol_delete(f.L, position)
    idx = f.indices[:position] + f.indices[position + 1:]
    return SpdFactor(L, idx, f.maxdiag)


def factor_rank1(f, v, sign=1.0):
    """Factor of ``L L^T + sign * v v^T`` on the same index list."""
    if f.dim == 0:
        return f
    L = kernels.chol_rank1(f.L, np.asarray(v, dtype=float), sign)
    return SpdFactor(L, list(f.indices), f.maxdiag)


@dataclass
class LsState:
    """Least-squares estimate with the inverse Gram ``P = (A^T A)^{-1}``."""

    x: np.ndarray
    P: np.ndarray
    m: int


def ls_init(A, y):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    G = A.T @ A
    f = spd_factor(G)
    P = np.linalg.solve(f.L.T, np.linalg.solve(f.L, np.eye(G.shape[0])))
    P = 0.5 * (P + P.T)
    x = P @ (A.T @ np.asarray(y, dtype=float))
    return LsState(x, P, A.shape[0])


def ls_check(s, A, tol=1e-9):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return float(np.abs(A.T @ A @ s.P - np.eye(s.P.shape[0])).max()) <= tol


def rls_append(s, A, b, w):
    """Fold one new measurement ``w = b x`` into the estimate."""
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape[0] != s.P.shape[0]:
        raise ValueError("row length does not match the state")
    if A is not None and np.shape(A)[-1] != b.shape[0]:
        raise ValueError("A does not match the state")
    Pb = s.P @ b
    K = Pb / (1.0 + b @ Pb)
    P = s.P - np.outer(K, Pb)
    x = s.x + K * (w - b @ s.x)
    return LsState(x, 0.5 * (P + P.T), s.m + 1)


def inverse_gram_append(K, b):
    """``(F^T F + b^T b)^{-1}`` from ``K = (F^T F)^{-1}``; also returns ``K b^T`` and ``1 + b K b^T``."""
    Kb = K @ b
    beta = 1.0 + b @ Kb
    K1 = K - np.outer(Kb, Kb) / beta
    return 0.5 * (K1 + K1.T), Kb, beta


class ExplicitInverse:
    """Inverse ``N`` of a square, possibly non-symmetric matrix ``M``.

    Both ``M`` and ``N`` are stored; every structural change is a rank-one
    correction of ``N``.  After ``refresh_every`` corrections (or when a
    pivot looks suspicious) ``N`` is recomputed from ``M``.
    """

    refresh_every = 100
    cond_limit = 1e12

    def __init__(self, M=None):
        if M is None:
            M = np.zeros((0, 0))
        self.M = np.array(M, dtype=float).reshape(np.shape(M))
        self.updates = 0
        self._refresh()

    @property
    def size(self):
        return self.M.shape[0]

    def _scale(self):
        return max(float(np.abs(self.M).max()) if self.M.size else 1.0, 1e-300)

    def _refresh(self):
        k = self.size
        self.updates = 0
        if k == 0:
            self.N = np.zeros((0, 0))
            return
        try:
            c = np.linalg.cond(self.M)
        except np.linalg.LinAlgError:
            c = np.inf
        if not c < self.cond_limit:
            raise SingularCrossGram(f"condition number {c:.3e}")
        self.N = np.linalg.inv(self.M)

    def _bump(self):
        self.updates += 1
        if self.updates >= self.refresh_every:
            self._refresh()

    def _check_pivot(self, s, ref):
        if not abs(s) > 1e-13 * max(ref, 1.0):
            # rank-one path looks unreliable; fall back to a direct inverse
            return False
        return True

    def check(self):
        k = self.size
        if k == 0:
            return 0.0
        return float(np.abs(self.M @ self.N - np.eye(k)).max())

    def grow(self, row, col, corner):
        """Append a row (bottom) and a column (right)."""
        row = np.asarray(row, dtype=float).reshape(-1)
        col = np.asarray(col, dtype=float).reshape(-1)
        k = self.size
        M = np.empty((k + 1, k + 1))
        M[:k, :k] = self.M
        M[:k, k] = col
        M[k, :k] = row
        M[k, k] = corner
        Nc = self.N @ col
        rN = row @ self.N
        s = corner - row @ Nc
        self.M = M
        if not self._check_pivot(s, abs(corner) + np.abs(row).max(initial=0) * np.abs(Nc).max(initial=0)):
            self._refresh()
            return
        N = np.empty((k + 1, k + 1))
        N[:k, :k] = self.N + np.outer(Nc, rN) / s
        N[:k, k] = -Nc / s
        N[k, :k] = -rN / s
        N[k, k] = 1.0 / s
        self.N = N
        self._bump()

    def delete(self, row, col):
        """Remove row ``row`` and column ``col`` of ``M``."""
        N = self.N
        piv = N[col, row]
        keep_r = np.arange(self.size) != row
        keep_c = np.arange(self.size) != col
        self.M = self.M[np.ix_(keep_r, keep_c)]
        if not self._check_pivot(piv, np.abs(N).max()):
            self._refresh()
            return
        self.N = N[np.ix_(keep_c, keep_r)] - np.outer(N[keep_c, row], N[col, keep_r]) / piv
        self._bump()

    def replace_row(self, i, row):
        row = np.asarray(row, dtype=float).reshape(-1)
        delta = row - self.M[i]
        Ne = self.N[:, i]
        dN = delta @ self.N
        s = 1.0 + dN[i]
        self.M[i] = row
        if not self._check_pivot(s, np.abs(dN).max(initial=0) * np.abs(Ne).max()):
            self._refresh()
            return
        self.N = self.N - np.outer(Ne, dN) / s
        self._bump()

    def replace_col(self, j, col):
        col = np.asarray(col, dtype=float).reshape(-1)
        delta = col - self.M[:, j]
        Nd = self.N @ delta
        eN = self.N[j]
        s = 1.0 + Nd[j]
        self.M[:, j] = col
        if not self._check_pivot(s, np.abs(Nd).max(initial=0) * np.abs(eN).max()):
            self._refresh()
            return
        self.N = self.N - np.outer(Nd, eN) / s
        self._bump()

    def rank1(self, u, v):
        """``M <- M + u v^T``."""
        u = np.asarray(u, dtype=float).reshape(-1)
        v = np.asarray(v, dtype=float).reshape(-1)
        Nu = self.N @ u
        vN = v @ self.N
        s = 1.0 + v @ Nu
        self.M = self.M + np.outer(u, v)
        if not self._check_pivot(s, np.abs(Nu).max(initial=0) * np.abs(v).max(initial=0)):
            self._refresh()
            return
        self.N = self.N - np.outer(Nu, vN) / s
        self._bump()

    def solve(self, b):
        return self.N @ b

    def solve_t(self, b):
        return b @ self.N
