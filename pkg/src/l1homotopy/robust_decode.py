"""Robust l1 decoding: sparse gross errors plus small dense noise.

With s = F x + c + q the error c is estimated from

    min_c  tau * ||c||_1 + 0.5 * ||P (c - s)||_2^2,     P F = 0,

a BPDN problem in c with the projector P = I - F (F^T F)^{-1} F^T.  When
rows (B, w) arrive, the new error entries d enter with weight eps, and eps
runs from 0 to 1.  An entry of d that shrinks to zero drops out of the
weighted set Gn and is handled like an old entry from then on.
"""
from dataclasses import dataclass, field

import numpy as np

from .bpdn import polish_support, solve_bpdn
from .errors import (ConfigError, DegenerateSupport, IterationLimit, NotPositiveDefinite,
                     RankDeficient, SingularGram)
from .homotopy import SHRINK, TERMINAL, ActiveSet, StepEvent, min_activation_step, min_shrink_step
from .linalg import inverse_gram_append
from .operators import CountingMatrix

REFRESH_EVERY = 50
ZERO_TOL = 1e-10


@dataclass
class RobustState:
    F: np.ndarray
    s: np.ndarray
    P: np.ndarray
    K: np.ndarray  # (F^T F)^{-1}
    tau: float
    c: np.ndarray
    p: np.ndarray  # P (c - s)
    active: ActiveSet
    gn: np.ndarray
    epsilon: float = 1.0

    @property
    def rows(self):
        return self.F.shape[0]

    @property
    def n(self):
        return self.F.shape[1]

    @property
    def support(self):
        return list(self.active.indices)

    @property
    def Gn(self):
        return np.flatnonzero(self.gn)

    @property
    def Ge(self):
        return [j for j in self.active.indices if not self.gn[j]]

    def copy(self):
        return RobustState(self.F.copy(), self.s.copy(), self.P, self.K.copy(), self.tau,
                           self.c.copy(), self.p.copy(), self.active.copy(), self.gn.copy(),
                           self.epsilon)


@dataclass
class RobustTrace:
    steps: list = field(default_factory=list)
    epsilons: list = field(default_factory=lambda: [0.0])
    lucky: bool = False
    nprod: int = 0
    counter: object = None

    @property
    def iterations(self):
        return sum(1 for ev in self.steps if ev.theta > 0 or ev.kind == TERMINAL)


@dataclass
class RobustKkt:
    support_violation: float
    offsupport_max: float
    passed: bool


def _inverse_gram(F):
    G = F.T @ F
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise RankDeficient("F^T F is not positive definite") from None
    d = np.diag(L) ** 2
    if d.min() <= G.shape[0] * np.finfo(float).eps * d.max():
        raise RankDeficient("F does not have full column rank")
    Li = np.linalg.inv(L)
    return Li.T @ Li


def null_projector(F, K=None):
    """``P = I - F (F^T F)^{-1} F^T``; returns ``(P, K)``."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if K is None:
        K = _inverse_gram(F)
    P = np.eye(F.shape[0]) - F @ K @ F.T
    return 0.5 * (P + P.T), K


def projector_append(P, K, F, b):
    """Extend ``(P, K)`` for ``F`` by one row ``b`` with rank-one corrections."""
    b = np.asarray(b, dtype=float).reshape(-1)
    K1, Kb, beta = inverse_gram_append(K, b)
    u = F @ Kb
    r = P.shape[0]
    P1 = np.empty((r + 1, r + 1))
    P1[:r, :r] = P + np.outer(u, u) / beta
    P1[:r, r] = -u / beta
    P1[r, :r] = -u / beta
    P1[r, r] = 1.0 / beta
    return P1, K1


def robust_kkt(state, rtol=1e-8):
    """Weighted optimality: -tau z on the support (eps tau on Gn), |p| <= tau elsewhere."""
    P, c, s, tau = state.P, state.c, state.s, state.tau
    p = P @ (c - s)
    on = c != 0
    wts = np.where(state.gn, state.epsilon, 1.0)
    sv = float(np.abs(p[on] + tau * wts[on] * np.sign(c[on])).max(initial=0.0))
    off = float(np.abs(p[~on]).max(initial=0.0))
    ok = sv <= rtol * tau and off <= tau * (1 + rtol)
    return RobustKkt(sv, off, bool(ok))


def robust_init(A, y, tau, max_steps=None):
    """Cold start: BPDN homotopy on the projector; returns ``(state, trace)``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != A.shape[0]:
        raise ConfigError("y", f"length {y.shape[0]} does not match {A.shape[0]} rows")
    if A.shape[0] <= A.shape[1]:
        raise ConfigError("A", "needs more rows than columns")
    P, K = null_projector(A)
    op = CountingMatrix(P, projector=True)
    try:
        bs, trace = solve_bpdn(op, P @ y, tau, max_steps=max_steps)
    except DegenerateSupport as exc:
        raise SingularGram(str(exc)) from None
    trace.counter = op
    st = RobustState(A.copy(), y.copy(), P, K, float(tau), bs.x, bs.p, bs.active,
                     np.zeros(A.shape[0], dtype=bool))
    return st, trace


def decode_message(state):
    """``x = (F^T F)^{-1} F^T (s - c)``."""
    return state.K @ (state.F.T @ (state.s - state.c))


def robust_add_measurements(state, B, w, max_steps=None):
    B = np.atleast_2d(np.asarray(B, dtype=float))
    w = np.asarray(w, dtype=float).reshape(-1)
    n = state.n
    if B.shape[1] != n:
        raise ConfigError("B", f"rows have {B.shape[1]} entries, expected {n}")
    if w.shape[0] != B.shape[0]:
        raise ConfigError("w", f"length {w.shape[0]} does not match {B.shape[0]} rows")
    tau = state.tau
    x0 = decode_message(state)
    P, K, F = state.P, state.K, state.F
    active = state.active.copy()
    idx = active.idx
    for b in B:
        # P[G, G] gains u u^T / beta on the old rows
        b = np.asarray(b, dtype=float)
        u = F @ (K @ b)
        beta = 1.0 + b @ K @ b
        if idx.size:
            active.rank1(u[idx] / np.sqrt(beta), 1.0)
        P, K = projector_append(P, K, F, b)
        F = np.vstack([F, b])
    r0, p = state.rows, B.shape[0]
    rows = r0 + p
    s = np.concatenate([state.s, w])
    d0 = w - B @ x0
    c = np.concatenate([state.c, d0])
    op = CountingMatrix(P, projector=True)
    active.gram_fn = op.gram_block
    gn = np.zeros(rows, dtype=bool)
    # the old correlations carry over; the new rows start at zero
    pv = np.concatenate([state.p, np.zeros(p)])
    trace = RobustTrace(counter=op)
    new = list(range(r0, rows))
    thr = ZERO_TOL * max(1.0, float(np.abs(c).max()))
    try:
        for j in new:
            active.add(j, 1.0 if c[j] > 0 else -1.0)
            gn[j] = True
        st = RobustState(F, s, P, K, tau, c, pv, active, gn, 0.0)
        for j in new:
            if abs(c[j]) <= thr:
                # numerically zero: leaves Gn in a zero-length step
                c[j] = 0.0
                active.remove(j)
                gn[j] = False
                trace.steps.append(StepEvent(0.0, SHRINK, j))
        if gn.any():
            _run(st, op, trace, max_steps or 20 * rows)
        else:
            trace.lucky = True
    except (NotPositiveDefinite, DegenerateSupport) as exc:
        raise SingularGram(str(exc)) from None
    st.gn[:] = False
    st.epsilon = 1.0
    _polish(st)
    return st, trace


def _run(st, op, trace, max_steps):
    c, pv, active, gn, tau = st.c, st.p, st.active, st.gn, st.tau
    rows, n = st.rows, st.n
    for it in range(max_steps):
        eps = st.epsilon
        idx = active.idx
        rhs = np.where(gn[idx], active.z, 0.0)
        dc_g = -active.solve(rhs)
        dc = np.zeros(rows)
        dc[idx] = dc_g
        d = op.gram_sparse(idx, dc_g)
        trace.nprod += 1
        mask = np.ones(rows, dtype=bool)
        mask[idx] = False
        shrink = min_shrink_step(c, dc, idx)
        act = min_activation_step(pv, d, tau, np.flatnonzero(mask), check=False)
        ev = shrink if shrink.theta <= act.theta else act
        room = (1.0 - eps) * tau
        if ev.theta >= room:
            ev = StepEvent(room, TERMINAL)
        t = ev.theta
        c += t * dc
        pv += t * d
        st.epsilon = 1.0 if ev.kind == TERMINAL else eps + t / tau
        trace.steps.append(ev)
        trace.epsilons.append(st.epsilon)
        if ev.kind == TERMINAL:
            return
        if ev.kind == SHRINK:
            _drop(st, ev.gamma)
        else:
            j, zj = ev.gamma, -ev.sign
            pv[j] = -tau * zj
            if len(active) >= rows - n:
                # full support: j enters along a free direction of P and
                # pushes one support entry out at the same eps
                idx = active.idx
                alpha = active.solve(op.gram_block(idx, [j])[:, 0])
                dirn = -zj * alpha
                down = np.flatnonzero(c[idx] * dirn < 0)
                if not down.size:
                    raise SingularGram(f"support would exceed {rows - n} entries")
                ratios = -c[idx][down] / dirn[down]
                k = int(np.argmin(ratios))
                t, i = float(ratios[k]), int(idx[down[k]])
                c[idx] += t * dirn
                c[j] = t * zj
                _drop(st, i)
                trace.steps.append(StepEvent(0.0, SHRINK, i))
                trace.epsilons.append(st.epsilon)
            active.add(j, zj)
        if not gn.any():
            trace.lucky = True
            return
        if (it + 1) % REFRESH_EVERY == 0:
            pv[:] = op.rmatvec(c - st.s)
            trace.nprod += 1
            active.check()
    raise IterationLimit(f"no convergence in {max_steps} steps")


def _drop(st, j):
    st.c[j] = 0.0
    z = st.active.signs[st.active.position(j)]
    st.active.remove(j)
    if st.gn[j]:
        # a new entry that vanished is treated like an old one from now on
        st.gn[j] = False
    else:
        st.p[j] = -st.tau * z


def _polish(st):
    Ps = st.P @ st.s
    st.c[:] = 0.0
    polish_support(st.c, st.p, st.active, st.tau, lambda idx: Ps[idx])
    st.p = st.P @ st.c - Ps
