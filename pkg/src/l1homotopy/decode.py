"""l1 decoding with a growing codeword.

The receiver holds x minimizing ||A x - y||_1 and gets p more rows (B, w).
With c = F x - s for the stack F = [A; B], s = [y; w], the homotopy solves

    min ||A x - y||_1 + eps * ||B x - w||_1

while eps runs from 0 to 1.  Optimality is carried by a dual vector xi with
xi = sign(c) on the error support and |xi| <= 1 elsewhere, balanced as
F^T xi = 0 once the still-weighted entries (Gn) are scaled by eps.

A basis of n rows with c = 0 and free xi is kept together with the explicit
inverse of its n x n row block.  Rows outside the basis with c = 0 keep a
fixed xi; they only appear in degenerate (already recovered) states.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateSupport, IterationLimit, SingularBootstrap, SingularCrossGram, SingularSubmatrix
from .homotopy import ACTIVATE, TERMINAL, StepEvent, min_activation_step
from .linalg import ExplicitInverse
from .operators import CountingMatrix

REFRESH_EVERY = 50
ZERO_TOL = 1e-10


@dataclass
class DecodeState:
    F: np.ndarray
    s: np.ndarray
    x: np.ndarray
    c: np.ndarray
    xi: np.ndarray
    basis: list
    gn: np.ndarray  # bool mask of new entries never zeroed yet
    epsilon: float
    inv: ExplicitInverse

    @property
    def rows(self):
        return self.F.shape[0]

    @property
    def n(self):
        return self.F.shape[1]

    @property
    def support(self):
        return np.flatnonzero(self.c)

    @property
    def Gn(self):
        return np.flatnonzero(self.gn)

    def copy(self):
        inv = ExplicitInverse.__new__(ExplicitInverse)
        inv.M = self.inv.M.copy()
        inv.N = self.inv.N.copy()
        inv.updates = self.inv.updates
        return DecodeState(self.F.copy(), self.s.copy(), self.x.copy(), self.c.copy(),
                           self.xi.copy(), list(self.basis), self.gn.copy(), self.epsilon, inv)


@dataclass
class DecodeTrace:
    steps: list = field(default_factory=list)
    epsilons: list = field(default_factory=lambda: [0.0])
    lucky: bool = False
    swaps: int = 0
    nprod: int = 0
    counter: object = None

    @property
    def iterations(self):
        return len(self.steps)


@dataclass
class DecodeKkt:
    sign_violation: float
    dual_max: float
    balance: float
    passed: bool


def zero_threshold(c):
    return ZERO_TOL * max(1.0, float(np.abs(c).max(initial=0.0)))


def balance_residual(state):
    """max |F_{Gn^c}^T xi + eps F_{Gn}^T xi|."""
    w = state.xi.copy()
    w[state.gn] *= state.epsilon
    return float(np.abs(state.F.T @ w).max(initial=0.0))


def decode_kkt(state, tol=1e-8):
    on = state.c != 0
    sv = float(np.abs(state.xi[on] - np.sign(state.c[on])).max(initial=0.0))
    dm = float(np.abs(state.xi).max(initial=0.0))
    scale = max(1.0, float(np.abs(state.F).max(initial=0.0)))
    bal = balance_residual(state)
    ok = sv <= tol and dm <= 1 + 1e-9 and bal <= tol * scale
    return DecodeKkt(sv, dm, bal, bool(ok))


def recovery_check(state):
    """True when fewer than rows - n error entries are nonzero."""
    c = np.asarray(state.c)
    top = float(np.abs(c).max(initial=0.0))
    thr = 1e-8 * top if top > 0 else 1e-12
    return int(np.count_nonzero(np.abs(c) > thr)) < state.rows - state.n


def _inverse(M):
    try:
        return ExplicitInverse(M)
    except SingularCrossGram as exc:
        raise SingularSubmatrix(str(exc)) from None


def _square_state(F, s):
    n = F.shape[1]
    inv = _inverse(F)
    x = inv.solve(s)
    return DecodeState(F.copy(), s.copy(), x, np.zeros(n), np.zeros(n), list(range(n)),
                       np.zeros(n, dtype=bool), 1.0, inv)


def decode_init(A, y, max_steps=None):
    """Solve min ||A x - y||_1 from scratch; returns ``(state, trace)``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    m, n = A.shape
    if y.shape[0] != m:
        raise ConfigError("y", f"length {y.shape[0]} does not match {m} rows")
    if m < n:
        raise ConfigError("A", f"{m} rows cannot determine {n} unknowns")
    base = None
    for k in range(min(n, m)):
        S = [(k + i) % m for i in range(n)]
        try:
            base = _square_state(A[S], y[S])
            break
        except SingularSubmatrix:
            continue
    if base is None:
        raise SingularBootstrap(f"no nonsingular {n}-row window among {min(n, m)} tries")
    rest = [i for i in range(m) if i not in set(S)]
    if not rest:
        return base, DecodeTrace(epsilons=[1.0])
    st, trace = decode_add_measurements(base, A[rest], y[rest], max_steps=max_steps)
    perm = np.array(S + rest)
    out = st.copy()
    for name in ("F", "s", "c", "xi", "gn"):
        arr = getattr(st, name)
        new = np.empty_like(arr)
        new[perm] = arr
        setattr(out, name, new)
    out.basis = [int(perm[b]) for b in st.basis]
    return out, trace


def decode_add_measurements(state, B, w, max_steps=None, callback=None):
    """Fold rows ``(B, w)`` into a decoded state; returns ``(state, trace)``."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    w = np.asarray(w, dtype=float).reshape(-1)
    n = state.n
    if B.shape[1] != n:
        raise ConfigError("B", f"rows have {B.shape[1]} entries, expected {n}")
    if w.shape[0] != B.shape[0]:
        raise ConfigError("w", f"length {w.shape[0]} does not match {B.shape[0]} rows")
    st = state.copy()
    r0, p = st.rows, B.shape[0]
    d0 = B @ st.x - w
    st.F = np.vstack([st.F, B])
    st.s = np.concatenate([st.s, w])
    st.c = np.concatenate([st.c, d0])
    st.xi = np.concatenate([st.xi, np.zeros(p)])
    new = np.arange(r0, r0 + p)
    thr = zero_threshold(st.c)
    small = new[np.abs(d0) <= thr]
    st.c[small] = 0.0
    nz = new[np.abs(d0) > thr]
    st.xi[nz] = np.sign(st.c[nz])
    st.gn = np.zeros(r0 + p, dtype=bool)
    st.gn[nz] = True
    st.epsilon = 0.0
    op = CountingMatrix(st.F)
    trace = DecodeTrace(counter=op)
    if not st.gn.any():
        trace.lucky = True
        st.epsilon = 1.0
        trace.epsilons.append(1.0)
        return st, trace
    try:
        _run(st, op, trace, max_steps or 20 * st.rows, callback)
    except SingularCrossGram as exc:
        raise SingularSubmatrix(str(exc)) from None
    st.gn[:] = False
    st.epsilon = 1.0
    _polish(st, op, trace)
    return st, trace


def _run(st, op, trace, max_steps, callback):
    F, c, xi, basis, inv = st.F, st.c, st.xi, st.basis, st.inv
    rows = st.rows
    for it in range(max_steps):
        eps = st.epsilon
        gn = st.gn
        # dual update: move xi on the basis so the balance tracks eps
        v = F[gn].T @ xi[gn]
        dxi = np.zeros(rows)
        dxi[basis] = -inv.solve_t(v)
        cand = np.sort(np.asarray(basis))
        # a basis row resting on the bound and pushed outward fires at once
        push = cand[(np.abs(xi[cand]) >= 1.0 - 1e-12) & (xi[cand] * dxi[cand] > 0)]
        if push.size:
            ev = StepEvent(0.0, ACTIVATE, int(push[0]), int(np.sign(xi[push[0]])))
        else:
            ev = min_activation_step(xi, dxi, 1.0, cand, check=False)
        room = 1.0 - eps
        if ev.theta >= room:
            xi += room * dxi
            np.clip(xi, -1.0, 1.0, out=xi)
            st.epsilon = 1.0
            trace.steps.append(StepEvent(room, TERMINAL))
            trace.epsilons.append(1.0)
            if callback:
                callback(st)
            return
        t = ev.theta
        xi += t * dxi
        g, zg = ev.gamma, ev.sign
        xi[g] = zg
        st.epsilon = eps + t
        trace.epsilons.append(st.epsilon)
        trace.steps.append(ev)
        if callback:
            callback(st)
        # primal update: row g leaves the basis, c(g) grows with sign zg
        pos = basis.index(g)
        dx = zg * inv.N[:, pos]
        dc = op.matvec(dx)
        trace.nprod += 1
        dc[basis] = 0.0
        dc[g] = zg
        inb = np.zeros(rows, dtype=bool)
        inb[basis] = True
        zero = (c == 0) & ~inb
        tol = 1e-10 * float(np.abs(dc).max())
        moving = zero & (np.abs(dc) > tol)
        blocked = np.flatnonzero(moving & (np.abs(xi - np.sign(dc)) > 1e-12))
        if blocked.size:
            # degenerate vertex: swap rows, x stays put
            j = int(blocked[np.argmax(np.abs(dc[blocked]))])
            basis[pos] = j
            inv.replace_row(pos, F[j])
            trace.swaps += 1
        else:
            # every entry heading toward zero counts, however close it is
            down = np.flatnonzero(c * dc < 0)
            if not down.size:
                raise DegenerateSupport("primal direction never returns to the basis")
            ratios = -c[down] / dc[down]
            k = int(np.argmin(ratios))
            t = float(ratios[k])
            j = int(down[k])
            st.x += t * dx
            c += t * dc
            c[zero & ~moving] = 0.0
            c[basis] = 0.0
            c[g] = t * zg
            c[j] = 0.0
            basis[pos] = j
            inv.replace_row(pos, F[j])
            # rows that vanish together with j stay at zero with a fixed xi
            hit = np.flatnonzero(np.abs(c) <= zero_threshold(c))
            c[hit] = 0.0
            hit = hit[st.gn[hit]]
            xi[hit] *= st.epsilon
            st.gn[hit] = False
        if not st.gn.any():
            trace.lucky = True
            return
        if (it + 1) % REFRESH_EVERY == 0:
            _refresh(st, op, trace)
            inv = st.inv
    raise IterationLimit(f"no convergence in {max_steps} steps")


def _refresh(st, op, trace):
    st.inv = ExplicitInverse(st.F[st.basis])
    st.x = st.inv.solve(st.s[st.basis])
    was_zero = st.c == 0
    st.c[:] = op.matvec(st.x) - st.s
    trace.nprod += 1
    st.c[was_zero] = 0.0


def _polish(st, op, trace):
    _refresh(st, op, trace)
