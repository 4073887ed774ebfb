"""Warm-start updates when the measured signal changes: y -> y_new with A fixed.

The homotopy solves the problem with right-hand side (1-eps)*y + eps*y_new
while eps runs from 0 to 1, starting from a solution for y.
"""
from dataclasses import dataclass, field

import numpy as np

from .bpdn import BpdnState, bpdn_kkt, polish_support
from .dantzig import DsEngine, ds_kkt
from .errors import IterationLimit, StaleWarmStart
from .homotopy import ACTIVATE, SHRINK, TERMINAL, StepEvent, min_activation_step, min_shrink_step
from .operators import as_counting

REFRESH_EVERY = 50


@dataclass
class SignalUpdateTrace:
    steps: list = field(default_factory=list)
    epsilons: list = field(default_factory=lambda: [0.0])
    nprod: int = 0

    @property
    def final_epsilon(self):
        return self.epsilons[-1]


def _blend(y_old, y_new, eps):
    return (1.0 - eps) * y_old + eps * y_new


def update_bpdn_signal(state, A, y_old, y_new, max_steps=None, check=True):
    op = as_counting(A)
    y_old = np.asarray(y_old, dtype=float).reshape(-1)
    y_new = np.asarray(y_new, dtype=float).reshape(-1)
    m, n = op.shape
    tau = state.tau
    if check and not bpdn_kkt(op.A, y_old, tau, state.x).passed:
        raise StaleWarmStart("state does not solve the old problem")
    trace = SignalUpdateTrace()
    st = state.copy()
    st.active.gram_fn = op.gram_block
    if np.array_equal(y_old, y_new):
        trace.steps.append(StepEvent(1.0, TERMINAL))
        trace.epsilons.append(1.0)
        return st, trace
    x, p, active = st.x, st.p, st.active
    q = op.rmatvec(y_old - y_new)
    trace.nprod += 1
    eps = 0.0
    max_steps = max_steps or 10 * n
    for it in range(max_steps):
        idx = active.idx
        dx_g = -active.solve(q[idx])
        dx = np.zeros(n)
        dx[idx] = dx_g
        d = op.gram_sparse(idx, dx_g) + q
        trace.nprod += 1
        mask = np.ones(n, dtype=bool)
        mask[idx] = False
        shrink = min_shrink_step(x, dx, idx)
        act = min_activation_step(p, d, tau, np.flatnonzero(mask), check=False)
        ev = shrink if shrink.theta <= act.theta else act
        room = 1.0 - eps
        if ev.theta >= room:
            ev = StepEvent(room, TERMINAL)
        t = ev.theta
        x += t * dx
        p += t * d
        eps = 1.0 if ev.kind == TERMINAL else eps + t
        if ev.kind == SHRINK:
            j = ev.gamma
            x[j] = 0.0
            p[j] = -tau * active.signs[active.position(j)]
            active.remove(j)
        elif ev.kind == ACTIVATE:
            s = -ev.sign
            p[ev.gamma] = -tau * s
            active.add(ev.gamma, s)
        trace.steps.append(ev)
        trace.epsilons.append(eps)
        if ev.kind == TERMINAL:
            break
        if (it + 1) % REFRESH_EVERY == 0:
            p[:] = op.rmatvec(op.matvec(x) - _blend(y_old, y_new, eps))
            trace.nprod += 1
            active.check()
    else:
        raise IterationLimit(f"no convergence in {max_steps} steps")
    polish_support(x, p, active, tau, lambda idx: op.columns(idx).T @ y_new)
    return BpdnState(x, tau, active, p), trace


def update_ds_signal(state, A, y_old, y_new, max_steps=None, check=True):
    op = as_counting(A)
    y_old = np.asarray(y_old, dtype=float).reshape(-1)
    y_new = np.asarray(y_new, dtype=float).reshape(-1)
    n = op.shape[1]
    tau = state.tau
    if check and not ds_kkt(op.A, y_old, tau, state.x, state.lam).passed:
        raise StaleWarmStart("state does not solve the old problem")
    trace = SignalUpdateTrace()
    st = state.copy()
    if np.array_equal(y_old, y_new):
        trace.steps.append(StepEvent(1.0, TERMINAL))
        trace.epsilons.append(1.0)
        return st, trace
    eng = DsEngine(op, st)
    q = op.rmatvec(y_old - y_new)
    eps = 0.0
    max_steps = max_steps or 10 * n
    for it in range(max_steps):
        s = eng.s
        dx_x = -s.inv.solve(q[s.Gl]) if s.Gl else np.zeros(0)
        dx = eng.full(s.Gx, dx_x)
        d = eng.phi_apply(s.Gx, dx_x) + q
        shrink = min_shrink_step(s.x, dx, s.Gx)
        act = min_activation_step(s.p, d, tau, eng.off(s.Gl), check=False)
        ev = shrink if shrink.theta <= act.theta else act
        room = 1.0 - eps
        if ev.theta >= room:
            ev = StepEvent(room, TERMINAL)
        t = ev.theta
        s.x += t * dx
        s.p += t * d
        eps = 1.0 if ev.kind == TERMINAL else eps + t
        trace.steps.append(ev)
        trace.epsilons.append(eps)
        if ev.kind == TERMINAL:
            break
        eng.after_primal_event(ev)
        if (it + 1) % REFRESH_EVERY == 0:
            eng.refresh(_blend(y_old, y_new, eps))
    else:
        raise IterationLimit(f"no convergence in {max_steps} steps")
    eng.polish(op.columns(eng.s.Gl).T @ y_new if eng.s.Gl else np.zeros(0))
    trace.nprod = 1 + eng.nprod
    return eng.s, trace
