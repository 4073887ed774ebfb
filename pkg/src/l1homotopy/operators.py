"""Instrumented matrix wrapper used by every solver for cost accounting."""
import numpy as np


class CountingMatrix:
    """Dense matrix that counts full applications of ``A^T A``.

    ``gram(v)`` and ``rmatvec(r)`` each count as one product (a product
    with ``A^T`` is always paired with one with ``A`` in the solvers).
    Column extraction and Gram blocks over a few columns are not counted.

    With ``projector=True`` the wrapped matrix is a symmetric idempotent
    ``P`` and the Gram operator is ``P`` itself.
    """

    def __init__(self, A, projector=False):
        self.A = np.ascontiguousarray(np.atleast_2d(np.asarray(A, dtype=float)))
        self.projector = projector
        self.nprod = 0
        self.nmatvec = 0

    @property
    def shape(self):
        return self.A.shape

    def reset(self):
        self.nprod = 0
        self.nmatvec = 0

    def columns(self, idx):
        return self.A[:, idx]

    def gram_block(self, rows, cols):
        if self.projector:
            return self.A[np.ix_(rows, cols)]
        return self.A[:, rows].T @ self.A[:, cols]

    def gram_column(self, j, rows=None):
        """``(A^T A)[rows, j]`` (all rows if ``rows`` is None), uncounted."""
        if self.projector:
            col = self.A[:, j]
            return col if rows is None else col[rows]
        a = self.A[:, j]
        if rows is None:
            return self.A.T @ a
        return self.A[:, rows].T @ a

    def diag(self, j):
        if self.projector:
            return float(self.A[j, j])
        a = self.A[:, j]
        return float(a @ a)

    def gram(self, v):
        self.nprod += 1
        if self.projector:
            return self.A @ v
        return self.A.T @ (self.A @ v)

    def gram_sparse(self, idx, vals):
        """``A^T A v`` for ``v`` supported on ``idx``; one counted product."""
        self.nprod += 1
        if self.projector:
            return self.A[:, idx] @ vals
        return self.A.T @ (self.A[:, idx] @ vals)

    def rmatvec(self, r):
        self.nprod += 1
        if self.projector:
            return self.A @ r
        return self.A.T @ r

    def matvec(self, x):
        self.nmatvec += 1
        if self.projector:
            return self.A @ x
        return self.A @ x

    def column_norms(self):
        if self.projector:
            return np.sqrt(np.clip(np.diag(self.A), 0.0, None))
        return np.sqrt((self.A * self.A).sum(axis=0))


def as_counting(A):
    if isinstance(A, CountingMatrix):
        return A
    return CountingMatrix(A)
