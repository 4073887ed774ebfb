import json

import numpy as np
import pytest

from l1homotopy.bench import (EXPERIMENTS, ExperimentConfig, aggregate, run_experiment, signal_config,
                              table_configs, table_csv)
from l1homotopy.errors import ConfigError
from l1homotopy.operators import CountingMatrix

SMALL = {"dynamic": dict(n=32, m=24, K=4), "decode": dict(n=8, m=24, K=3, p=4),
         "robust-decode": dict(n=8, m=24, K=3, p=4, tau=0.01)}


def dims(exp):
    return SMALL["dynamic"] if exp.startswith("dynamic") else SMALL[exp]


@pytest.mark.parametrize("exp", EXPERIMENTS)
def test_trials_pass_and_counts_agree(exp):
    rep = run_experiment(ExperimentConfig(exp, trials=8, seed=3, **dims(exp)))
    assert rep.passed
    assert len(rep.records) == 8
    assert all(r["counts_agree"] and r["diff"] <= 1e-7 for r in rep.records)
    assert rep.aggregates == aggregate(rep.records, False)


@pytest.mark.parametrize("exp", EXPERIMENTS)
def test_deterministic(exp):
    cfg = dict(experiment=exp, trials=1, seed="0x2a", **dims(exp))
    assert run_experiment(cfg).to_json() == run_experiment(cfg).to_json()


def test_jobs_match_serial():
    cfg = ExperimentConfig("dynamic-seq-bpdn", trials=4, seed=1, **SMALL["dynamic"])
    assert run_experiment(cfg, jobs=2).to_json() == run_experiment(cfg).to_json()


def test_timing_fields():
    rep = run_experiment(ExperimentConfig("decode", trials=2, timing=True, **SMALL["decode"]))
    assert rep.aggregates["warm_time_mean"] > 0
    assert "warm_time" in rep.records[0]
    rep = run_experiment(ExperimentConfig("decode", trials=2, **SMALL["decode"]))
    assert "warm_time" not in rep.records[0]


def test_counting_matrix():
    A = np.arange(6.0).reshape(2, 3)
    op = CountingMatrix(A)
    op.gram(np.ones(3))
    op.gram_block([0], [1])
    assert op.nprod == 1


@pytest.mark.parametrize("bad", [
    dict(experiment="lasso"),
    dict(n=0),
    dict(K=-1),
    dict(K=99),
    dict(lam=1.5),
    dict(trials=0),
    dict(seed="x"),
    dict(signal="chirp"),
    dict(signal="blocks", n=30),
    dict(sigma=-1.0),
])
def test_config_errors(bad):
    cfg = dict(experiment="dynamic-x-bpdn", n=32, m=16, K=4)
    cfg.update(bad)
    with pytest.raises(ConfigError):
        run_experiment(cfg)
    with pytest.raises(ConfigError):
        run_experiment(dict(experiment="decode", n=8, m=4, K=0))
    with pytest.raises(ConfigError):
        run_experiment(dict(experiment="robust-decode", n=8, m=16, K=0))
    with pytest.raises(ConfigError):
        run_experiment(dict(experiment="decode", n=8, m=16, K=0, signal="blocks"))
    with pytest.raises(ConfigError):
        run_experiment(dict(experiment="decode", n=8, m=16, K=0, bogus=1))


def test_table_configs():
    rows = table_configs("tableI", "full", 500, 0)
    assert [c.lam for c in rows] == [0.5, 0.1, 0.05, 0.01]
    assert (rows[0].n, rows[0].m, rows[0].K) == (1024, 512, 102)
    rows = table_configs("tableIII", "desk", 50, 0)
    assert [c.p for c in rows] == [1, 2, 5, 10]
    assert all(c.tau == 0.01 and c.rate == 0.1 for c in rows)
    with pytest.raises(ConfigError):
        table_configs("tableIV", "desk", 1, 0)
    with pytest.raises(ConfigError):
        table_configs("tableI", "huge", 1, 0)


@pytest.mark.parametrize("signal", ["blocks", "pcwpoly", "image"])
def test_signal_rows(signal):
    cfg = signal_config(signal, "desk", 2, 4)
    if signal != "image":
        cfg.n, cfg.m = 64, 32
    rep = run_experiment(cfg)
    assert rep.passed
    assert rep.aggregates["warm_nprod_mean"] < rep.aggregates["cold_nprod_mean"]


def test_report_formats():
    reps = [run_experiment(c) for c in table_configs("tableIII", "desk", 1, 0)[:2]]
    doc = json.loads(reps[0].to_json())
    assert set(doc) == {"config", "records", "aggregates", "passed"}
    lines = table_csv(reps).splitlines()
    assert lines[0] == "method,lambda,mean_nprod,mean_time"
    assert lines[1].startswith("warm p=1,0.01,") and lines[4].startswith("cold p=2,")
