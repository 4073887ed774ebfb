"""Warm-start versus cold-start experiments with exact product accounting.

Each trial draws its data from ``rng(seed, trial)``, solves the old
problem, then runs the update (warm arm) and a from-scratch solve of the
new problem (cold arm) on identical data.  The cost metric is nProdAtA:
full applications of A^T A (or of the projector / coding matrix).
"""
import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .bpdn import solve_bpdn
from .dantzig import solve_ds
from .decode import decode_add_measurements, decode_init
from .dynamic_seq import bpdn_add_measurement, ds_add_measurement
from .dynamic_x import update_bpdn_signal, update_ds_signal
from .errors import ConfigError
from .operators import CountingMatrix
from .problems import (blocks_heights, blocks_signal, corrupt_codeword, draw_kn, gaussian_matrix,
                       orthonormal_matrix, parse_seed, pcwpoly_coefs, pcwpoly_signal, perturb_spikes, read_pgm,
                       rng, spike_signal, synthetic_image, wavelet_analysis, wavelet_matrix)
from .robust_decode import decode_message, robust_add_measurements, robust_init

__all__ = ["CountingMatrix", "ExperimentConfig", "ExperimentReport", "run_experiment", "table_configs"]

EXPERIMENTS = ("dynamic-x-bpdn", "dynamic-x-ds", "dynamic-seq-bpdn", "dynamic-seq-ds", "decode", "robust-decode")
MATCH_TOL = 1e-7
SIGNALS = ("spikes", "blocks", "pcwpoly", "image")
WAVELET = {"blocks": "haar", "pcwpoly": "daub8", "image": "haar"}


@dataclass
class ExperimentConfig:
    experiment: str
    n: int
    m: int
    K: int
    p: int = 1
    lam: float = 0.1
    tau: float = None  # fixed tau (decoding); otherwise lam * ||A^T y||_inf
    sigma: float = 0.01
    rate: float = 0.1
    trials: int = 10
    seed: int = 0
    timing: bool = False
    signal: str = "spikes"
    image: str = None  # PGM file for the image-slice sequence; synthetic if unset

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"{self.experiment!r} is not one of {', '.join(EXPERIMENTS)}")
        for name in ("n", "m", "p", "trials"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(name, f"must be a positive integer, got {v!r}")
        if not isinstance(self.K, (int, np.integer)) or self.K < 0:
            raise ConfigError("K", f"must be a nonnegative integer, got {self.K!r}")
        if self.experiment.startswith("dynamic"):
            if self.K > self.n:
                raise ConfigError("K", f"{self.K} spikes do not fit in n = {self.n}")
            if not 0 < self.lam < 1:
                raise ConfigError("lam", f"must lie in (0, 1), got {self.lam!r}")
        else:
            if self.m < self.n or (self.experiment == "robust-decode" and self.m == self.n):
                raise ConfigError("m", f"codeword length {self.m} too short for n = {self.n}")
            if self.K > self.m:
                raise ConfigError("K", f"{self.K} corruptions exceed m = {self.m}")
            if not 0 <= self.rate <= 1:
                raise ConfigError("rate", f"must lie in [0, 1], got {self.rate!r}")
        if self.signal not in SIGNALS:
            raise ConfigError("signal", f"{self.signal!r} is not one of {', '.join(SIGNALS)}")
        if self.signal != "spikes":
            if not self.experiment.startswith("dynamic-x"):
                raise ConfigError("signal", "signal sequences only drive the dynamic-x experiments")
            if self.n & (self.n - 1):
                raise ConfigError("n", f"wavelet signals need a power-of-two length, got {self.n}")
        if self.experiment == "robust-decode" and not (self.tau or 0) > 0:
            raise ConfigError("tau", "robust decoding needs a positive tau")
        if not self.sigma >= 0:
            raise ConfigError("sigma", "must be nonnegative")
        self.seed = parse_seed(self.seed)
        return self


@dataclass
class ExperimentReport:
    config: dict
    records: list
    aggregates: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(not r["flagged"] for r in self.records)

    def to_json(self):
        return json.dumps({"config": self.config, "records": self.records,
                           "aggregates": self.aggregates, "passed": self.passed},
                          indent=1, sort_keys=True)

    def csv_rows(self):
        c, a = self.config, self.aggregates
        lam = c["tau"] if c["tau"] else c["lam"]
        tag = "" if c["experiment"].startswith("dynamic") else f" p={c['p']}"
        t = lambda key: "" if a.get(key) is None else repr(a[key])
        return [
            ["method", "lambda", "mean_nprod", "mean_time"],
            ["warm" + tag, repr(lam), repr(a["warm_nprod_mean"]), t("warm_time_mean")],
            ["cold" + tag, repr(lam), repr(a["cold_nprod_mean"]), t("cold_time_mean")],
        ]


def _stats(vals):
    vals = [float(v) for v in vals]
    if not vals:
        return None, None
    mu = math.fsum(vals) / len(vals)
    sd = math.sqrt(math.fsum((v - mu) ** 2 for v in vals) / len(vals))
    return mu, sd


def aggregate(records, timing):
    out = {}
    keys = ["warm_steps", "cold_steps", "warm_nprod", "cold_nprod"]
    if timing:
        keys += ["warm_time", "cold_time"]
    for k in keys:
        mu, sd = _stats(r[k] for r in records)
        out[k + "_mean"], out[k + "_std"] = mu, sd
    if out["warm_nprod_mean"]:
        out["nprod_ratio"] = out["cold_nprod_mean"] / out["warm_nprod_mean"]
    if out["warm_steps_mean"]:
        out["steps_ratio"] = out["cold_steps_mean"] / out["warm_steps_mean"]
    out["flagged"] = sum(1 for r in records if r["flagged"])
    return out


def _tau(lam, A, y):
    return lam * float(np.abs(A.T @ y).max())


def _timed(fn, *args):
    t = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t


@lru_cache(maxsize=4)
def _slices(path, n):
    img = synthetic_image(n) if path is None else read_pgm(path)
    if img.shape[0] != n:
        raise ConfigError("n", f"image columns have length {img.shape[0]}, not {n}")
    if img.shape[1] < 2:
        raise ConfigError("image", "need at least two columns")
    return img


@lru_cache(maxsize=4)
def _wavelet(n, family):
    return wavelet_matrix(n, family)


def _signal_pair(cfg, g, trial):
    """Coefficients of two consecutive signals in a wavelet-sparse sequence."""
    n, fam = cfg.n, WAVELET[cfg.signal]
    if cfg.signal == "blocks":
        h0 = blocks_heights(g)
        s0, s1 = blocks_signal(n, heights=h0), blocks_signal(n, g, heights=h0)
    elif cfg.signal == "pcwpoly":
        c0 = pcwpoly_coefs(g, cfg.sigma)
        s0, s1 = pcwpoly_signal(n, coefs=c0), pcwpoly_signal(n, g, cfg.sigma, coefs=c0)
    else:
        img = _slices(cfg.image, n)
        k = trial % (img.shape[1] - 1)
        s0, s1 = img[:, k], img[:, k + 1]
    return wavelet_analysis(s0, fam), wavelet_analysis(s1, fam), _wavelet(n, fam)


def _trial_dynamic(cfg, g, trial):
    n, m, K, sig = cfg.n, cfg.m, cfg.K, cfg.sigma
    A = gaussian_matrix(m, n, g)
    if cfg.signal == "spikes":
        x = spike_signal(n, K, g)
    else:
        x, x_next, W = _signal_pair(cfg, g, trial)
        A = A @ W
    y = A @ x + sig * g.standard_normal(m)
    tau = _tau(cfg.lam, A, y)
    ds = cfg.experiment.endswith("-ds")
    solve = solve_ds if ds else solve_bpdn
    st, _ = solve(A, y, tau)
    if cfg.experiment.startswith("dynamic-x"):
        x_new = perturb_spikes(x, draw_kn(K, g), g) if cfg.signal == "spikes" else x_next
        y_new = A @ x_new + sig * g.standard_normal(m)
        A_new = A
        upd = update_ds_signal if ds else update_bpdn_signal
        warm_op = CountingMatrix(A)
        (ws, wt), t_w = _timed(upd, st, warm_op, y, y_new)
    else:
        x_new = x
        b = g.standard_normal(n) / np.sqrt(m)
        w = float(b @ x + sig * g.standard_normal())
        A_new = np.vstack([A, b])
        y_new = np.append(y, w)
        upd = ds_add_measurement if ds else bpdn_add_measurement
        warm_op = CountingMatrix(A)
        (ws, wt), t_w = _timed(upd, st, warm_op, y, b, w)
    cold_op = CountingMatrix(A_new)
    (cs, ct), t_c = _timed(solve, cold_op, y_new, tau)
    return dict(
        warm_steps=len(wt.steps), cold_steps=len(ct.steps),
        warm_nprod=wt.nprod, cold_nprod=ct.nprod,
        counts_agree=bool(warm_op.nprod == wt.nprod and cold_op.nprod == ct.nprod),
        diff=float(np.abs(ws.x - cs.x).max()),
        error=float(np.linalg.norm(ws.x - x_new) / max(np.linalg.norm(x_new), 1e-300)),
        warm_time=t_w, cold_time=t_c,
    )


def _codeword(cfg, g, orth):
    n, m, p = cfg.n, cfg.m, cfg.p
    F = orthonormal_matrix(m + p, n, g) if orth else gaussian_matrix(m + p, n, g)
    x = g.standard_normal(n)
    s = F @ x
    old, _ = corrupt_codeword(s[:m], "zero_k", cfg.K, g)
    new, _ = corrupt_codeword(s[m:], "bernoulli", cfg.rate, g)
    s = np.concatenate([old, new])
    return F, x, s


def _trial_decode(cfg, g):
    m = cfg.m
    F, x, s = _codeword(cfg, g, orth=False)
    st, _ = decode_init(F[:m], s[:m])
    (ws, wt), t_w = _timed(decode_add_measurements, st, F[m:], s[m:])
    (cs, ct), t_c = _timed(decode_init, F, s)
    return dict(
        warm_steps=wt.iterations, cold_steps=ct.iterations,
        warm_nprod=wt.nprod, cold_nprod=ct.nprod,
        counts_agree=bool(wt.counter.nmatvec == wt.nprod and ct.counter.nmatvec == ct.nprod),
        diff=float(np.abs(ws.x - cs.x).max()),
        error=float(np.linalg.norm(ws.x - x) / np.linalg.norm(x)),
        warm_time=t_w, cold_time=t_c,
    )


def _trial_robust(cfg, g):
    m = cfg.m
    F, x, s = _codeword(cfg, g, orth=True)
    s = s + cfg.sigma * g.standard_normal(s.size)
    st, _ = robust_init(F[:m], s[:m], cfg.tau)
    (ws, wt), t_w = _timed(robust_add_measurements, st, F[m:], s[m:])
    (cs, ct), t_c = _timed(robust_init, F, s, cfg.tau)
    return dict(
        warm_steps=len(wt.steps), cold_steps=len(ct.steps),
        warm_nprod=wt.nprod, cold_nprod=ct.nprod,
        counts_agree=bool(wt.counter.nprod == wt.nprod and ct.counter.nprod == ct.nprod),
        diff=float(np.abs(ws.c - cs.c).max()),
        error=float(np.linalg.norm(decode_message(ws) - x) / np.linalg.norm(x)),
        warm_time=t_w, cold_time=t_c,
    )


def run_trial(cfg, trial):
    g = rng(cfg.seed, trial)
    if cfg.experiment.startswith("dynamic"):
        rec = _trial_dynamic(cfg, g, trial)
    elif cfg.experiment == "decode":
        rec = _trial_decode(cfg, g)
    else:
        rec = _trial_robust(cfg, g)
    rec["trial"] = trial
    rec["match"] = rec["diff"] <= MATCH_TOL
    rec["flagged"] = not (rec["match"] and rec["counts_agree"])
    if not cfg.timing:
        del rec["warm_time"], rec["cold_time"]
    return rec


def _run_one(args):
    return run_trial(*args)


def run_experiment(cfg, jobs=1):
    """Run ``cfg.trials`` independent trials; ``jobs > 1`` uses worker processes."""
    if isinstance(cfg, dict):
        try:
            cfg = ExperimentConfig(**cfg)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from None
    cfg.validate()
    if jobs < 1:
        raise ConfigError("jobs", "must be at least 1")
    work = [(cfg, t) for t in range(cfg.trials)]
    if jobs == 1:
        records = [_run_one(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            records = list(ex.map(_run_one, work))
    return ExperimentReport(asdict(cfg), records, aggregate(records, cfg.timing))


SCALES = {
    "tableI": {"full": dict(n=1024, m=512, K=102), "desk": dict(n=256, m=128, K=25)},
    "tableII": {"full": dict(n=1024, m=512, K=102), "desk": dict(n=256, m=128, K=25)},
    "tableIII": {"full": dict(n=150, m=300, K=60), "desk": dict(n=75, m=150, K=30)},
}
LAMBDAS = (0.5, 0.1, 0.05, 0.01)
BLOCKS = (1, 2, 5, 10)


def table_configs(table, scale, trials, seed):
    """Experiment configs for the rows of one table."""
    if table not in SCALES:
        raise ConfigError("table", f"{table!r} is not one of {', '.join(SCALES)}")
    if scale not in SCALES[table]:
        raise ConfigError("scale", f"{scale!r} is not 'full' or 'desk'")
    dims = SCALES[table][scale]
    if table == "tableIII":
        return [ExperimentConfig("robust-decode", p=p, tau=0.01, sigma=0.01, rate=0.1,
                                 trials=trials, seed=seed, **dims) for p in BLOCKS]
    exp = "dynamic-x-bpdn" if table == "tableI" else "dynamic-seq-bpdn"
    return [ExperimentConfig(exp, lam=lam, sigma=0.01, trials=trials, seed=seed, **dims)
            for lam in LAMBDAS]


SIGNAL_ROWS = {
    "blocks": {"full": dict(n=2048, m=1024, lam=0.01), "desk": dict(n=256, m=128, lam=0.01)},
    "pcwpoly": {"full": dict(n=2048, m=1024, lam=0.01), "desk": dict(n=256, m=128, lam=0.01)},
    "image": {"full": dict(n=256, m=128, lam=0.005), "desk": dict(n=64, m=32, lam=0.005)},
}


def signal_config(signal, scale, trials, seed, image=None):
    """Dynamic-x config for one wavelet-sparse signal sequence."""
    if signal not in SIGNAL_ROWS:
        raise ConfigError("signal", f"{signal!r} is not one of {', '.join(SIGNAL_ROWS)}")
    if scale not in SIGNAL_ROWS[signal]:
        raise ConfigError("scale", f"{scale!r} is not 'full' or 'desk'")
    dims = dict(SIGNAL_ROWS[signal][scale])
    if signal == "image" and image is not None:
        dims["n"] = int(read_pgm(image).shape[0])
        dims["m"] = dims["n"] // 2
    return ExperimentConfig("dynamic-x-bpdn", K=0, signal=signal, image=image, sigma=0.01,
                            trials=trials, seed=seed, **dims)


def table_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "lambda", "mean_nprod", "mean_time"])
    for rep in reports:
        for row in rep.csv_rows()[1:]:
            w.writerow(row)
    return buf.getvalue()
