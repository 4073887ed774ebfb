"""Warm-start updates when one measurement row is added or removed.

With Phi_eps = A^T A + eps * b^T b the homotopy moves eps between 0 and 1.
Along one segment the solution is linear in an auxiliary step theta and
eps advances by theta / (1 - theta*u), u = b_G U^{-1} b_G^T, so each
segment costs a single product with A^T A.
"""
from dataclasses import dataclass, field

import numpy as np

from .bpdn import bpdn_kkt, polish_support
from .dantzig import DsEngine, ds_kkt
from .errors import ConfigError, IterationLimit, NonmonotoneEpsilon, StaleWarmStart
from .homotopy import ACTIVATE, INF, SHRINK, TERMINAL, StepEvent, min_activation_step, min_shrink_step
from .operators import CountingMatrix, as_counting

REFRESH_EVERY = 50


@dataclass
class SeqUpdateTrace:
    steps: list = field(default_factory=list)
    epsilons: list = field(default_factory=list)
    thetas: list = field(default_factory=list)
    us: list = field(default_factory=list)
    direction: int = 1
    nprod: int = 0

    @property
    def final_epsilon(self):
        return self.epsilons[-1]


def replay_epsilon(trace):
    """Rebuild the eps sequence from the recorded (theta, u) pairs."""
    s = trace.direction
    eps = [trace.epsilons[0]]
    for th, u in zip(trace.thetas, trace.us):
        eps.append(eps[-1] + s * th / (1.0 - s * th * u))
    return eps


def _row(b, n):
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape[0] != n:
        raise ConfigError("b", f"row has {b.shape[0]} entries, expected {n}")
    return b


def _end_theta(R, u, s):
    den = 1.0 + s * R * u
    return R / den if den > 0 else INF


def _bpdn_seq(state, op, y, b, w, s, max_steps):
    """Run eps from 0 to 1 (s = +1) or from 1 to 0 (s = -1)."""
    m, n = op.shape
    tau = state.tau
    st = state.copy()
    eps_box = [0.0 if s > 0 else 1.0]

    def gram_fn(rows, cols):
        blk = op.gram_block(rows, cols)
        return blk + eps_box[0] * np.outer(b[rows], b[cols])

    active = st.active
    active.gram_fn = gram_fn
    x, p = st.x, st.p
    trace = SeqUpdateTrace(direction=s)
    trace.epsilons.append(eps_box[0])
    for it in range(max_steps):
        eps = eps_box[0]
        idx = active.idx
        r = b @ x - w
        bg = b[idx]
        v = active.solve(bg)
        u = float(bg @ v)
        dx_g = -s * r * v
        dx = np.zeros(n)
        dx[idx] = dx_g
        d = op.gram_sparse(idx, dx_g) + (eps * (bg @ dx_g) + s * r) * b
        trace.nprod += 1
        mask = np.ones(n, dtype=bool)
        mask[idx] = False
        shrink = min_shrink_step(x, dx, idx)
        act = min_activation_step(p, d, tau, np.flatnonzero(mask), check=False)
        ev = shrink if shrink.theta <= act.theta else act
        R = 1.0 - eps if s > 0 else eps
        t_end = _end_theta(R, u, s)
        if ev.theta >= t_end:
            ev = StepEvent(t_end, TERMINAL)
        t = ev.theta
        if ev.kind == TERMINAL:
            delta = R
        else:
            den = 1.0 - s * t * u
            if not den > 0:
                raise NonmonotoneEpsilon(f"step {t!r} with u = {u!r}")
            delta = t / den
        x += t * dx
        p += t * d
        eps_box[0] = (1.0 if s > 0 else 0.0) if ev.kind == TERMINAL else eps + s * delta
        if idx.size:
            active.rank1(np.sqrt(delta) * bg, s)
        if ev.kind == SHRINK:
            j = ev.gamma
            x[j] = 0.0
            p[j] = -tau * active.signs[active.position(j)]
            active.remove(j)
        elif ev.kind == ACTIVATE:
            sg = -ev.sign
            p[ev.gamma] = -tau * sg
            active.add(ev.gamma, sg)
        trace.steps.append(ev)
        trace.thetas.append(t)
        trace.us.append(u)
        trace.epsilons.append(eps_box[0])
        if ev.kind == TERMINAL:
            break
        if (it + 1) % REFRESH_EVERY == 0:
            e = eps_box[0]
            p[:] = op.rmatvec(op.matvec(x) - y) + e * (b @ x - w) * b
            trace.nprod += 1
            active.check()
    else:
        raise IterationLimit(f"no convergence in {max_steps} steps")
    return st, trace


def _polish_bpdn(st, A, y):
    polish_support(st.x, st.p, st.active, st.tau, lambda idx: A[:, idx].T @ y)


def bpdn_add_measurement(state, A, y, b, w, max_steps=None, check=True):
    """Fold the row ``(b, w)`` into a BPDN solution for ``(A, y)``."""
    op = as_counting(A)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = op.shape[1]
    b = _row(b, n)
    w = float(w)
    if check and not bpdn_kkt(op.A, y, state.tau, state.x).passed:
        raise StaleWarmStart("state does not solve the old problem")
    st, trace = _bpdn_seq(state, op, y, b, w, 1, max_steps or 10 * n)
    A2 = np.vstack([op.A, b])
    y2 = np.append(y, w)
    st.active.gram_fn = CountingMatrix(A2).gram_block
    _polish_bpdn(st, A2, y2)
    return st, trace


def bpdn_remove_measurement(state, A, y, row, max_steps=None, check=True):
    """Drop row ``row`` from the stacked system ``(A, y)``."""
    A = np.asarray(getattr(A, "A", A), dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    m, n = A.shape
    if not 0 <= row < m:
        raise ConfigError("row", f"index {row} out of range for {m} rows")
    if check and not bpdn_kkt(A, y, state.tau, state.x).passed:
        raise StaleWarmStart("state does not solve the stacked problem")
    keep = np.arange(m) != row
    op = CountingMatrix(A[keep])
    b = A[row].copy()
    st, trace = _bpdn_seq(state, op, y[keep], b, float(y[row]), -1, max_steps or 10 * n)
    st.active.gram_fn = op.gram_block
    _polish_bpdn(st, op.A, y[keep])
    return st, trace


def ds_add_measurement(state, A, y, b, w, max_steps=None, check=True):
    """Fold the row ``(b, w)`` into a DS primal-dual solution for ``(A, y)``."""
    op = as_counting(A)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = op.shape[1]
    b = _row(b, n)
    w = float(w)
    tau = state.tau
    if check and not ds_kkt(op.A, y, tau, state.x, state.lam).passed:
        raise StaleWarmStart("state does not solve the old problem")
    eng = DsEngine(op, state.copy(), b=b, eps=0.0)
    trace = SeqUpdateTrace(direction=1)
    trace.epsilons.append(0.0)
    max_steps = max_steps or 10 * n
    for it in range(max_steps):
        s = eng.s
        eps = eng.eps
        Gx, Gl = s.Gx, s.Gl
        r = b @ s.x - w
        sl = b @ s.lam
        bl = b[Gl]
        bx = b[Gx]
        if Gx:
            Nbl = s.inv.solve(bl)
            u = float(bx @ Nbl)
            dx_x = -r * Nbl
            dl_l = -sl * s.inv.solve_t(bx)
        else:
            u = 0.0
            dx_x = dl_l = np.zeros(0)
        dx = eng.full(Gx, dx_x)
        dl = eng.full(Gl, dl_l)
        d = eng.phi_apply(Gx, dx_x) + r * b
        e = eng.phi_apply(Gl, dl_l) + sl * b
        evs = [
            ("x", min_shrink_step(s.x, dx, Gx)),
            ("x", min_activation_step(s.p, d, tau, eng.off(Gl), check=False)),
            ("l", min_shrink_step(s.lam, dl, Gl)),
            ("l", min_activation_step(s.a, e, 1.0, eng.off(Gx), check=False)),
        ]
        side, ev = min(evs, key=lambda pair: pair[1].theta)
        R = 1.0 - eps
        t_end = _end_theta(R, u, 1)
        if ev.theta >= t_end:
            ev = StepEvent(t_end, TERMINAL)
        t = ev.theta
        if ev.kind == TERMINAL:
            delta = R
        else:
            den = 1.0 - t * u
            if not den > 0:
                raise NonmonotoneEpsilon(f"step {t!r} with u = {u!r}")
            delta = t / den
        s.x += t * dx
        s.p += t * d
        s.lam += t * dl
        s.a += t * e
        if Gx:
            s.inv.rank1(delta * bl, bx)
        eng.eps = 1.0 if ev.kind == TERMINAL else eps + delta
        trace.steps.append(ev)
        trace.thetas.append(t)
        trace.us.append(u)
        trace.epsilons.append(eng.eps)
        if ev.kind == TERMINAL:
            break
        if side == "x":
            eng.after_primal_event(ev)
        elif ev.kind == SHRINK:
            l = ev.gamma
            s.lam[l] = 0.0
            s.p[l] = tau * s.zl[Gl.index(l)]
            eng.primal_after_removal(l, tau)
        else:
            i = ev.gamma
            zi = -ev.sign
            s.a[i] = -zi
            eng.primal_after_activation(i, zi, tau)
        if (it + 1) % REFRESH_EVERY == 0:
            eng.refresh(y, w)
    else:
        raise IterationLimit(f"no convergence in {max_steps} steps")
    s = eng.s
    if s.Gl:
        eng.polish(op.columns(s.Gl).T @ y + b[s.Gl] * w)
    trace.nprod = eng.nprod
    return s, trace
