"""Command-line front end.

Exit codes: 0 success, 1 bad configuration or input, 2 solver failure,
3 a bench or selftest check failed.
"""
import argparse
import json
import os
import sys

import numpy as np

from . import bench
from .bpdn import bpdn_kkt, solve_bpdn
from .dantzig import ds_kkt, solve_ds
from .decode import decode_add_measurements, decode_init, decode_kkt
from .dynamic_seq import bpdn_add_measurement, ds_add_measurement
from .dynamic_x import update_bpdn_signal, update_ds_signal
from .errors import ConfigError, L1HomotopyError, SolverError
from .matio import atomic_write, read_matrix, read_vector, write_matrix
from .oracle import bpdn_brute, ds_brute, l1_regression_brute
from .problems import corrupt_codeword, gaussian_matrix, orthonormal_matrix, parse_seed, rng
from .robust_decode import decode_message, robust_add_measurements, robust_init, robust_kkt
from .statefile import load_state, save_state

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def _seed(args):
    if args.seed is not None:
        return parse_seed(args.seed)
    env = os.environ.get("L1H_SEED")
    return parse_seed(env) if env else 0


def _emit(obj, path=None):
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path:
        atomic_write(path, text, mode="w")
    else:
        sys.stdout.write(text)


def _distinct(out, *inputs):
    if out is None or not os.path.exists(out):
        return
    for p in inputs:
        if p is not None and os.path.exists(p) and os.path.samefile(out, p):
            raise ConfigError("out", f"{out} would overwrite an input file")


def _tau(ratio, A, y):
    if not 0 < ratio:
        raise ConfigError("tau-ratio", f"must be positive, got {ratio!r}")
    return ratio * float(np.abs(A.T @ y).max())


def _summary(kind, A, y, st, trace):
    x = st.x
    if kind == "bpdn":
        ok = bpdn_kkt(A, y, st.tau, x).passed
    else:
        ok = ds_kkt(A, y, st.tau, x, st.lam).passed
    return {"problem": kind, "tau": st.tau, "support": [int(i) for i in np.flatnonzero(x)],
            "steps": len(trace.steps), "nprod": trace.nprod, "kkt": ok, "x": x.tolist()}


def cmd_solve(args):
    _distinct(args.out, args.matrix, args.rhs)
    _distinct(args.save_state, args.matrix, args.rhs)
    A = read_matrix(args.matrix)
    y = read_vector(args.rhs)
    if y.size != A.shape[0]:
        raise ConfigError("rhs", f"length {y.size} does not match {A.shape[0]} rows")
    tau = _tau(args.tau_ratio, A, y)
    st, trace = (solve_bpdn if args.problem == "bpdn" else solve_ds)(A, y, tau)
    if args.out:
        write_matrix(args.out, st.x.reshape(-1, 1))
    if args.save_state:
        save_state(args.save_state, A, y, st)
    _emit(_summary(args.problem, A, y, st, trace))
    return EXIT_OK


def cmd_update(args):
    for out in (args.out, args.save_state):
        _distinct(out, args.state, args.new_rhs, args.new_row)
    kind, A, y, st = load_state(args.state)
    if args.op == "dynamic-x":
        if args.new_rhs is None:
            raise ConfigError("new-rhs", "dynamic-x needs --new-rhs")
        y_new = read_vector(args.new_rhs)
        if y_new.size != y.size:
            raise ConfigError("new-rhs", f"length {y_new.size} does not match {y.size} rows")
        fn = update_bpdn_signal if kind == "bpdn" else update_ds_signal
        st, trace = fn(st, A, y, y_new)
    else:
        if args.new_row is None or args.new_value is None:
            raise ConfigError("new-row", "dynamic-seq needs --new-row and --new-value")
        b = read_vector(args.new_row)
        if b.size != A.shape[1]:
            raise ConfigError("new-row", f"row has {b.size} entries, expected {A.shape[1]}")
        fn = bpdn_add_measurement if kind == "bpdn" else ds_add_measurement
        st, trace = fn(st, A, y, b, args.new_value)
        A = np.vstack([A, b])
        y_new = np.append(y, args.new_value)
    if args.out:
        write_matrix(args.out, st.x.reshape(-1, 1))
    if args.save_state:
        save_state(args.save_state, A, y_new, st)
    out = _summary(kind, A, y_new, st, trace)
    out["epsilon"] = trace.epsilons[-1]
    _emit(out)
    return EXIT_OK


def cmd_decode(args):
    n, m, K, p = args.n, args.m, args.errors, args.block
    robust = args.mode == "robust"
    if n < 1 or m < n or (robust and m == n):
        raise ConfigError("m", f"codeword length {m} too short for n = {n}")
    if not 0 <= K <= m:
        raise ConfigError("errors", f"{K} not in [0, {m}]")
    if p < 0:
        raise ConfigError("block", "must be nonnegative")
    if args.noise < 0:
        raise ConfigError("noise", "must be nonnegative")
    g = rng(_seed(args))
    F = orthonormal_matrix(m + p, n, g) if robust else gaussian_matrix(m + p, n, g)
    x = g.standard_normal(n)
    s = F @ x
    old, _ = corrupt_codeword(s[:m], "zero_k", K, g)
    new, _ = corrupt_codeword(s[m:], "bernoulli", args.rate, g)
    s = np.concatenate([old, new]) + args.noise * g.standard_normal(m + p)
    if robust:
        st, trace = robust_init(F[:m], s[:m], args.tau)
        xh = decode_message(st)
    else:
        st, trace = decode_init(F[:m], s[:m])
        xh = st.x
    out = {"mode": args.mode, "n": n, "m": m, "errors": K, "error_inf": float(np.abs(xh - x).max()),
           "init_steps": len(trace.steps)}
    if p:
        if robust:
            st, tr = robust_add_measurements(st, F[m:], s[m:])
            xh = decode_message(st)
            out["kkt"] = robust_kkt(st).passed
        else:
            st, tr = decode_add_measurements(st, F[m:], s[m:])
            xh = st.x
            out["kkt"] = decode_kkt(st).passed
        out.update(block=p, update_steps=len(tr.steps), update_nprod=tr.nprod, lucky=tr.lucky,
                   error_inf=float(np.abs(xh - x).max()))
    out["recovered"] = out["error_inf"] <= 1e-6
    _emit(out, args.report)
    return EXIT_OK


def cmd_bench(args):
    if args.trials < 1:
        raise ConfigError("trials", "must be at least 1")
    _distinct(args.report, args.csv)
    if args.signal == "spikes":
        cfgs = bench.table_configs(args.table, args.scale, args.trials, _seed(args))
    elif args.table != "tableI":
        raise ConfigError("signal", "signal sequences belong to tableI")
    else:
        cfgs = [bench.signal_config(args.signal, args.scale, args.trials, _seed(args), args.image)]
    for c in cfgs:
        c.timing = args.timing
    reports = [bench.run_experiment(c, jobs=args.jobs) for c in cfgs]
    doc = {"table": args.table, "scale": args.scale,
           "reports": [json.loads(r.to_json()) for r in reports],
           "passed": all(r.passed for r in reports)}
    if args.report:
        _emit(doc, args.report)
    if args.csv:
        atomic_write(args.csv, bench.table_csv(reports), mode="w")
    for r in reports:
        a, c = r.aggregates, r.config
        key = f"p={c['p']}" if args.table == "tableIII" else f"{c['signal']} lam={c['lam']}"
        print(f"{args.table} {key} warm_nprod={a['warm_nprod_mean']:.3f} cold_nprod={a['cold_nprod_mean']:.3f} "
              f"warm_steps={a['warm_steps_mean']:.3f} cold_steps={a['cold_steps_mean']:.3f} flagged={a['flagged']}")
    return EXIT_OK if doc["passed"] else EXIT_CHECK


def _selftest_oracles(g, count):
    worst = {"bpdn": 0.0, "ds": 0.0, "decode": 0.0}
    kkt = True
    for _ in range(count):
        m, n = int(g.integers(4, 9)), int(g.integers(2, 7))
        A = g.standard_normal((m, n))
        y = g.standard_normal(m)
        tau = g.uniform(0.05, 0.9) * float(np.abs(A.T @ y).max())
        st, _ = solve_bpdn(A, y, tau)
        worst["bpdn"] = max(worst["bpdn"], float(np.abs(st.x - bpdn_brute(A, y, tau)).max()))
        kkt &= bpdn_kkt(A, y, tau, st.x).passed
        k = min(n, 4)
        Ad = A[:, :k]
        tau = g.uniform(0.05, 0.9) * float(np.abs(Ad.T @ y).max())
        sd, _ = solve_ds(Ad, y, tau)
        worst["ds"] = max(worst["ds"], float(np.abs(sd.x - ds_brute(Ad, y, tau)[0]).max()))
        kkt &= ds_kkt(Ad, y, tau, sd.x, sd.lam).passed
        k = min(n, 3)
        Ae = g.standard_normal((m + 2, k))
        ye = Ae @ g.standard_normal(k)
        ye[g.choice(m + 2, 2, replace=False)] += 3 * g.standard_normal(2)
        se, _ = decode_init(Ae, ye)
        worst["decode"] = max(worst["decode"], float(np.abs(se.x - l1_regression_brute(Ae, ye)).max()))
        kkt &= decode_kkt(se).passed
    return worst, kkt


def cmd_selftest(args):
    g = rng(_seed(args), 99)
    ok = True
    worst, kkt = _selftest_oracles(g, args.instances)
    for name, err in worst.items():
        good = err <= 1e-7
        ok &= good
        print(f"{'PASS' if good else 'FAIL'} oracle {name}: max diff {err:.2e}")
    ok &= kkt
    print(f"{'PASS' if kkt else 'FAIL'} optimality certificates")
    small = {"dynamic": dict(n=32, m=24, K=4), "decode": dict(n=8, m=24, K=3, p=4),
             "robust-decode": dict(n=8, m=24, K=3, p=4, tau=0.01)}
    for exp in bench.EXPERIMENTS:
        dims = small["dynamic"] if exp.startswith("dynamic") else small[exp]
        rep = bench.run_experiment(dict(experiment=exp, trials=args.instances, seed=_seed(args), **dims))
        good = rep.passed
        ok &= good
        print(f"{'PASS' if good else 'FAIL'} warm/cold {exp}: flagged {rep.aggregates['flagged']}"
              f"/{args.instances}")
    return EXIT_OK if ok else EXIT_CHECK


def build_parser():
    ap = _Parser(prog="l1homotopy", description="Warm-started l1 homotopy solvers")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve one BPDN or DS instance from scratch")
    p.add_argument("problem", choices=["bpdn", "ds"])
    p.add_argument("--matrix", required=True)
    p.add_argument("--rhs", required=True)
    p.add_argument("--tau-ratio", type=float, required=True, help="tau as a fraction of ||A^T y||_inf")
    p.add_argument("--out", help="write the solution here (.csv or binary)")
    p.add_argument("--save-state", help="write a resumable state container")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("update", help="warm-start update from a saved state")
    p.add_argument("op", choices=["dynamic-x", "dynamic-seq"])
    p.add_argument("--state", required=True)
    p.add_argument("--new-rhs")
    p.add_argument("--new-row")
    p.add_argument("--new-value", type=float)
    p.add_argument("--out")
    p.add_argument("--save-state")
    p.set_defaults(func=cmd_update)

    p = sub.add_parser("decode", help="encode, corrupt and decode a random message")
    p.add_argument("mode", choices=["run", "robust"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--errors", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--block", type=int, default=0, help="rows added afterwards with a warm start")
    p.add_argument("--rate", type=float, default=0.1, help="corruption rate of the added rows")
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--seed")
    p.add_argument("--report")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("bench", help="warm versus cold experiments")
    p.add_argument("table", choices=["tableI", "tableII", "tableIII"])
    p.add_argument("--scale", choices=["full", "desk"], default="desk")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed")
    p.add_argument("--report")
    p.add_argument("--csv")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--signal", choices=bench.SIGNALS, default="spikes")
    p.add_argument("--image", help="PGM image whose column slices form the signal sequence")
    p.add_argument("--timing", action="store_true", help="record wall-clock times (not reproducible)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("selftest", help="oracle, certificate and warm/cold checks")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--seed")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (L1HomotopyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
