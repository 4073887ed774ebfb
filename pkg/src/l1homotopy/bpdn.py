"""BPDN / LASSO homotopy, cold start.

Solves  min_x  tau*||x||_1 + 0.5*||A x - y||_2^2  by following the solution
path from tau0 = ||A^T y||_inf (where x = 0) down to the requested tau.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, IterationLimit
from .homotopy import ACTIVATE, SHRINK, TERMINAL, ActiveSet, StepEvent, lars_activation_step, min_shrink_step
from .operators import as_counting

REFRESH_EVERY = 50


@dataclass
class BpdnState:
    x: np.ndarray
    tau: float
    active: ActiveSet
    p: np.ndarray  # A^T (A x - y)

    @property
    def support(self):
        return list(self.active.indices)

    def copy(self):
        return BpdnState(self.x.copy(), self.tau, self.active.copy(), self.p.copy())


@dataclass
class BpdnTrace:
    steps: list = field(default_factory=list)
    taus: list = field(default_factory=list)
    nprod: int = 0


@dataclass
class KktReport:
    support_violation: float
    offsupport_max: float
    passed: bool


def check_columns(op):
    norms = op.column_norms()
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        raise ConfigError("A", f"column {int(bad[0])} is zero")


def bpdn_kkt(A, y, tau, x, rtol=1e-8):
    A = np.asarray(getattr(A, "A", A), dtype=float)
    x = np.asarray(x, dtype=float)
    p = A.T @ (A @ x - np.asarray(y, dtype=float))
    on = x != 0
    sv = float(np.abs(p[on] + tau * np.sign(x[on])).max(initial=0.0))
    off = float(np.abs(p[~on]).max(initial=0.0))
    ok = sv <= rtol * tau and off <= tau * (1 + rtol)
    return KktReport(sv, off, bool(ok))


def support_solution(op, y, tau, idx, z):
    """x on the support from the closed form ``(A_G^T A_G)^{-1}(A_G^T y - tau z)``."""
    idx = list(idx)
    if not idx:
        return np.zeros(0)
    Ag = op.columns(idx)
    G = Ag.T @ Ag
    return np.linalg.solve(G, Ag.T @ y - tau * np.asarray(z, dtype=float))


def _gram_fn(op):
    return op.gram_block


def solve_bpdn(A, y, tau, max_steps=None, trace=None):
    """Cold-start homotopy; returns ``(state, trace)``."""
    op = as_counting(A)
    y = np.asarray(y, dtype=float).reshape(-1)
    m, n = op.shape
    if y.shape[0] != m:
        raise ConfigError("y", f"length {y.shape[0]} does not match {m} rows")
    if not tau > 0:
        raise ConfigError("tau", "must be positive")
    check_columns(op)
    if trace is None:
        trace = BpdnTrace()
    p = -op.rmatvec(y)
    trace.nprod += 1
    x = np.zeros(n)
    tau0 = float(np.abs(p).max())
    trace.taus.append(tau0)
    active = ActiveSet(_gram_fn(op))
    state = BpdnState(x, tau0, active, p)
    if tau >= tau0:
        state.tau = float(tau)
        trace.steps.append(StepEvent(0.0, TERMINAL))
        return state, trace
    g = int(np.argmax(np.abs(p)))
    active.add(g, -np.sign(p[g]))
    p[g] = -tau0 * active.signs[-1]
    _descend(op, y, state, float(tau), trace, max_steps or 20 * n)
    return state, trace


def bpdn_path(A, y, state, tau, max_steps=None, trace=None):
    """Continue a solved state down to a smaller ``tau``."""
    op = as_counting(A)
    y = np.asarray(y, dtype=float).reshape(-1)
    if tau > state.tau:
        raise ConfigError("tau", "path continuation only decreases tau")
    if trace is None:
        trace = BpdnTrace()
    state = state.copy()
    state.active.gram_fn = _gram_fn(op)
    trace.taus.append(state.tau)
    _descend(op, y, state, float(tau), trace, max_steps or 20 * op.shape[1])
    return state, trace


def _descend(op, y, state, target, trace, max_steps):
    n = op.shape[1]
    x, p, active = state.x, state.p, state.active
    cur = state.tau
    for it in range(max_steps):
        idx = active.idx
        delta = active.solve(active.z)
        q = op.gram_sparse(idx, delta)
        trace.nprod += 1
        dfull = np.zeros(n)
        dfull[idx] = delta
        mask = np.ones(n, dtype=bool)
        mask[idx] = False
        shrink = min_shrink_step(x, dfull, idx)
        act = lars_activation_step(p, q, cur, np.flatnonzero(mask))
        room = cur - target
        ev = shrink if shrink.theta <= act.theta else act
        if ev.theta >= room:
            ev = StepEvent(room, TERMINAL)
        t = ev.theta
        x[idx] += t * delta
        p += t * q
        cur -= t
        if ev.kind == SHRINK:
            j = ev.gamma
            x[j] = 0.0
            p[j] = -cur * active.signs[active.position(j)]
            active.remove(j)
        elif ev.kind == ACTIVATE:
            # p hits +cur means the new coefficient is negative
            s = -ev.sign
            p[ev.gamma] = -cur * s
            active.add(ev.gamma, s)
        trace.steps.append(ev)
        trace.taus.append(cur)
        if ev.kind == TERMINAL:
            break
        if (it + 1) % REFRESH_EVERY == 0:
            p[:] = op.rmatvec(op.matvec(x) - y)
            trace.nprod += 1
            active.check()
    else:
        raise IterationLimit(f"no convergence in {max_steps} steps")
    state.tau = target
    _polish(op, y, state)


def _polish(op, y, state):
    """Re-solve x on the final support and snap the support correlations."""
    polish_support(state.x, state.p, state.active, state.tau, lambda idx: op.columns(idx).T @ y)


def polish_support(x, p, active, tau, rhs_fn):
    """Closed-form x on the support; ``rhs_fn(idx)`` returns ``(A^T y)[idx]``.

    An entry that joined at the very end of the path can come out with a
    roundoff-sized value of the wrong sign; it sits exactly on the
    boundary and is dropped from the support.
    """
    while len(active):
        idx = active.idx
        z = active.z
        xs = active.solve(rhs_fn(idx) - tau * z)
        bad = np.flatnonzero(xs * z <= 0)
        if not bad.size:
            break
        k = int(bad[np.argmin(np.abs(xs[bad]))])
        j = int(idx[k])
        x[j] = 0.0
        p[j] = -tau * z[k]
        active.remove(j)
    else:
        return
    x[:] = 0.0
    x[idx] = xs
    p[idx] = -tau * z
