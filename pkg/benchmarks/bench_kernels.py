"""Compiled versus numpy kernels: per-call time on representative sizes.

    python3 benchmarks/bench_kernels.py [--repeat 200] [--sizes 32,128,512]

Also times one full warm-start update with each backend so the effect on
a real solve is visible, and checks both backends return the same numbers.
"""
import argparse
import timeit

import numpy as np

from l1homotopy import kernels
from l1homotopy.bench import ExperimentConfig, run_trial


def _factor(k, g):
    M = g.standard_normal((k + 5, k))
    return np.linalg.cholesky(M.T @ M)


def cases(k, g):
    L = _factor(k, g)
    col = g.standard_normal(k)
    v = 0.1 * g.standard_normal(k)
    n = 8 * k
    vals, dirs = g.standard_normal(n), g.standard_normal(n)
    idx = np.sort(g.choice(n, k, replace=False)).astype(np.int64)
    off = np.setdiff1d(np.arange(n), idx).astype(np.int64)
    return {
        "chol_append": lambda: kernels.chol_append(L, col, float(col @ col) + k, 1e-12),
        "chol_delete": lambda: kernels.chol_delete(L, k // 3),
        "chol_rank1": lambda: kernels.chol_rank1(L, v, 1.0),
        "chol_solve": lambda: kernels.chol_solve(L, col),
        "shrink_scan": lambda: kernels.shrink_scan(vals, dirs, idx, 1e-12),
        "activation_scan": lambda: kernels.activation_scan(vals, dirs, 10.0, off, 1e-12),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--sizes", default="32,128,512")
    args = ap.parse_args()
    backends = sorted(kernels.available_backends())
    print(f"backends: {', '.join(backends)}")
    print(f"{'kernel':<16}{'k':>6}" + "".join(f"{b + ' us':>14}" for b in backends) + f"{'speedup':>10}")
    for k in (int(s) for s in args.sizes.split(",")):
        results = {}
        for b in backends:
            kernels.use_backend(b)
            for name, fn in cases(k, np.random.default_rng(k)).items():
                t = min(timeit.repeat(fn, number=max(1, args.repeat // 10), repeat=10))
                results.setdefault(name, {})[b] = (t / max(1, args.repeat // 10) * 1e6, fn())
        for name, row in results.items():
            outs = [np.asarray(o[1], dtype=float) if not isinstance(o[1], tuple) else np.asarray(o[1][0], dtype=float)
                    for o in row.values()]
            same = all(np.allclose(outs[0], o, rtol=1e-10, atol=1e-12) for o in outs[1:])
            line = f"{name:<16}{k:>6}" + "".join(f"{row[b][0]:>14.2f}" for b in backends)
            if "cython" in row:
                line += f"{row['python'][0] / row['cython'][0]:>9.1f}x"
            print(line + ("" if same else "  MISMATCH"))
    cfg = ExperimentConfig("dynamic-x-bpdn", n=512, m=256, K=50, lam=0.01, trials=1).validate()
    for b in backends:
        kernels.use_backend(b)
        t = min(timeit.repeat(lambda: run_trial(cfg, 0), number=1, repeat=3))
        print(f"warm+cold trial (n=512, lam=0.01) with {b}: {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
