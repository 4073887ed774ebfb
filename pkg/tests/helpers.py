"""Random instance builders shared by the tests."""
import numpy as np


def random_lasso(g, m, n, K=None, sigma=0.01, lam=None):
    A = g.standard_normal((m, n)) / np.sqrt(m)
    x = np.zeros(n)
    K = max(1, n // 5) if K is None else K
    x[g.choice(n, K, replace=False)] = g.choice([-1.0, 1.0], K)
    y = A @ x + sigma * g.standard_normal(m)
    lam = g.uniform(0.02, 0.6) if lam is None else lam
    tau = lam * float(np.abs(A.T @ y).max())
    return A, x, y, tau


def codeword(g, m, n, K):
    A = g.standard_normal((m, n))
    x = g.standard_normal(n)
    y = A @ x
    idx = g.choice(m, K, replace=False)
    y[idx] = 0.0
    return A, x, y
