"""Primal-dual homotopy for the Dantzig selector.

Solves  min ||x||_1  s.t.  ||A^T (A x - y)||_inf <= tau  together with its
dual.  With Phi = A^T A, p = Phi x - A^T y and a = Phi lambda, a solution
pair satisfies

    p = tau*z_lambda on G_lambda,   |p| < tau elsewhere,
    a = -z_x on G_x,                |a| < 1 elsewhere,

with |G_x| = |G_lambda|.  The square cross-Gram block Phi[G_lambda, G_x]
is kept as an explicit inverse updated by rank-one corrections.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateSupport, IterationLimit
from .homotopy import (ACTIVATE, TERMINAL, StepEvent, lars_activation_step,
                       min_activation_step, min_shrink_step)
from .linalg import ExplicitInverse
from .operators import as_counting

REFRESH_EVERY = 50


@dataclass
class DsState:
    x: np.ndarray
    lam: np.ndarray
    tau: float
    Gx: list
    Gl: list
    zx: list
    zl: list
    inv: ExplicitInverse
    p: np.ndarray  # Phi x - A^T y
    a: np.ndarray  # Phi lambda

    def copy(self):
        inv = ExplicitInverse.__new__(ExplicitInverse)
        inv.M = self.inv.M.copy()
        inv.N = self.inv.N.copy()
        inv.updates = self.inv.updates
        return DsState(self.x.copy(), self.lam.copy(), self.tau, list(self.Gx), list(self.Gl),
                       list(self.zx), list(self.zl), inv, self.p.copy(), self.a.copy())


@dataclass
class DsTrace:
    steps: list = field(default_factory=list)
    params: list = field(default_factory=list)
    nprod: int = 0


@dataclass
class DsKktReport:
    ds1: float
    ds2: float
    ds3: float
    ds4: float
    passed: bool


def ds_kkt(A, y, tau, x, lam, rtol=1e-8):
    A = np.asarray(getattr(A, "A", A), dtype=float)
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    p = A.T @ (A @ x - np.asarray(y, dtype=float))
    a = A.T @ (A @ lam)
    onl = lam != 0
    onx = x != 0
    r1 = float(np.abs(p[onl] - tau * np.sign(lam[onl])).max(initial=0.0))
    r2 = float(np.abs(a[onx] + np.sign(x[onx])).max(initial=0.0))
    r3 = float(np.abs(p[~onl]).max(initial=0.0))
    r4 = float(np.abs(a[~onx]).max(initial=0.0))
    ok = r1 <= rtol * tau and r2 <= rtol and r3 <= tau * (1 + rtol) and r4 <= 1 + rtol
    return DsKktReport(r1, r2, r3, r4, bool(ok))


class DsEngine:
    """Mutable working copy of a DS state plus the operator it lives on.

    ``b`` (a row) and ``eps`` describe the rank-one term of
    ``Phi_eps = A^T A + eps * b^T b`` used by the measurement update; both
    are unset for the plain problem.
    """

    def __init__(self, op, state, b=None, eps=0.0):
        self.op = op
        self.n = op.shape[1]
        self.s = state
        self.b = b
        self.eps = eps
        self.nprod = 0

    # -- Gram access ---------------------------------------------------------------
    def phi(self, rows, cols):
        blk = self.op.gram_block(list(rows), list(cols))
        if self.b is not None and self.eps:
            blk = blk + self.eps * np.outer(self.b[list(rows)], self.b[list(cols)])
        return blk

    def phi_row(self, i, cols):
        return self.phi([i], cols).reshape(-1)

    def phi_col(self, rows, j):
        return self.phi(rows, [j]).reshape(-1)

    def phi_apply(self, idx, vals):
        out = self.op.gram_sparse(np.asarray(idx, dtype=np.int64), vals)
        self.nprod += 1
        if self.b is not None and self.eps:
            out = out + self.eps * self.b * (self.b[idx] @ vals)
        return out

    def full(self, idx, vals):
        v = np.zeros(self.n)
        v[idx] = vals
        return v

    def rebuild_inverse(self):
        s = self.s
        self.s.inv = ExplicitInverse(self.phi(s.Gl, s.Gx) if s.Gl else np.zeros((0, 0)))

    # -- candidate sets --------------------------------------------------------------
    def off(self, support, exclude=-1):
        mask = np.ones(self.n, dtype=bool)
        mask[list(support)] = False
        if exclude >= 0:
            mask[exclude] = False
        return np.flatnonzero(mask)

    # -- completions ------------------------------------------------------------------
    def dual_after_activation(self, g, zg):
        """``g`` just joined G_lambda with sign ``zg``; move lambda to restore balance."""
        s = self.s
        Gl, Gx = s.Gl, s.Gx
        if Gx:
            dl_l = -zg * s.inv.solve_t(self.phi_col(Gx, g))
        else:
            dl_l = np.zeros(0)
        idx = Gl + [g]
        vals = np.append(dl_l, zg)
        dl = self.full(idx, vals)
        e = self.phi_apply(idx, vals)
        shrink = min_shrink_step(s.lam, dl, Gl)
        act = min_activation_step(s.a, e, 1.0, self.off(Gx), check=False)
        ev = shrink if shrink.theta <= act.theta else act
        if ev.kind == TERMINAL:
            raise DegenerateSupport("dual direction is unbounded")
        t = ev.theta
        s.lam += t * dl
        s.a += t * e
        if ev.kind == ACTIVATE:
            i = ev.gamma
            zi = -ev.sign
            s.a[i] = -zi
            s.inv.grow(self.phi_row(g, Gx), self.phi_col(Gl, i), self.phi([g], [i])[0, 0])
            Gl.append(g)
            s.zl.append(zg)
            Gx.append(i)
            s.zx.append(zi)
            return ("x+", i, zi)
        l = ev.gamma
        pos = Gl.index(l)
        s.lam[l] = 0.0
        s.p[l] = s.tau * s.zl[pos]
        s.inv.replace_row(pos, self.phi_row(g, Gx))
        Gl[pos] = g
        s.zl[pos] = zg
        return ("l-", l, None)

    def dual_after_removal(self, j):
        """``j`` just left G_x (still listed); move lambda so that ``a_j`` relaxes."""
        s = self.s
        Gl, Gx = s.Gl, s.Gx
        pos_j = Gx.index(j)
        zj = s.zx[pos_j]
        dl_l = zj * s.inv.N[pos_j, :].copy()
        g = int(np.argmax(np.abs(s.lam[Gl])))
        if dl_l[g] != 0:
            dl_l /= abs(dl_l[g])
        dl = self.full(Gl, dl_l)
        e = self.phi_apply(Gl, dl_l)
        shrink = min_shrink_step(s.lam, dl, Gl)
        cand = self.off([k for k in Gx if k != j])
        act = min_activation_step(s.a, e, 1.0, cand, check=False)
        ev = shrink if shrink.theta <= act.theta else act
        if ev.kind == TERMINAL:
            raise DegenerateSupport("dual direction is unbounded")
        t = ev.theta
        s.lam += t * dl
        s.a += t * e
        if ev.kind == ACTIVATE:
            i = ev.gamma
            zi = -ev.sign
            s.a[i] = -zi
            s.inv.replace_col(pos_j, self.phi_col(Gl, i))
            Gx[pos_j] = i
            s.zx[pos_j] = zi
            return ("x+", i, zi)
        l = ev.gamma
        pos_l = Gl.index(l)
        s.lam[l] = 0.0
        s.p[l] = s.tau * s.zl[pos_l]
        s.inv.delete(pos_l, pos_j)
        del Gl[pos_l]
        del s.zl[pos_l]
        del Gx[pos_j]
        del s.zx[pos_j]
        return ("l-", l, None)

    def primal_after_activation(self, i, zi, bound):
        """``i`` just joined G_x with sign ``zi``; move x at fixed parameters."""
        s = self.s
        Gl, Gx = s.Gl, s.Gx
        if Gl:
            dx_x = -zi * s.inv.solve(self.phi_col(Gl, i))
        else:
            dx_x = np.zeros(0)
        idx = Gx + [i]
        vals = np.append(dx_x, zi)
        dx = self.full(idx, vals)
        d = self.phi_apply(idx, vals)
        shrink = min_shrink_step(s.x, dx, Gx)
        act = min_activation_step(s.p, d, bound, self.off(Gl), check=False)
        ev = shrink if shrink.theta <= act.theta else act
        if ev.kind == TERMINAL:
            raise DegenerateSupport("primal direction is unbounded")
        t = ev.theta
        s.x += t * dx
        s.p += t * d
        if ev.kind == ACTIVATE:
            g = ev.gamma
            zg = ev.sign
            s.p[g] = bound * zg
            s.inv.grow(self.phi_row(g, Gx), self.phi_col(Gl, i), self.phi([g], [i])[0, 0])
            Gl.append(g)
            s.zl.append(zg)
            Gx.append(i)
            s.zx.append(zi)
            return ("l+", g, zg)
        j = ev.gamma
        pos = Gx.index(j)
        s.x[j] = 0.0
        s.a[j] = -s.zx[pos]
        s.inv.replace_col(pos, self.phi_col(Gl, i))
        Gx[pos] = i
        s.zx[pos] = zi
        return ("x-", j, None)

    def primal_after_removal(self, l, bound):
        """``l`` just left G_lambda (still listed); move x so that ``p_l`` relaxes."""
        s = self.s
        Gl, Gx = s.Gl, s.Gx
        pos_l = Gl.index(l)
        zl = s.zl[pos_l]
        dx_x = -zl * s.inv.N[:, pos_l].copy()
        g = int(np.argmax(np.abs(s.x[Gx])))
        if dx_x[g] != 0:
            dx_x /= abs(dx_x[g])
        dx = self.full(Gx, dx_x)
        d = self.phi_apply(Gx, dx_x)
        shrink = min_shrink_step(s.x, dx, Gx)
        cand = self.off([k for k in Gl if k != l])
        act = min_activation_step(s.p, d, bound, cand, check=False)
        ev = shrink if shrink.theta <= act.theta else act
        if ev.kind == TERMINAL:
            raise DegenerateSupport("primal direction is unbounded")
        t = ev.theta
        s.x += t * dx
        s.p += t * d
        if ev.kind == ACTIVATE:
            g = ev.gamma
            zg = ev.sign
            s.p[g] = bound * zg
            s.inv.replace_row(pos_l, self.phi_row(g, Gx))
            Gl[pos_l] = g
            s.zl[pos_l] = zg
            return ("l+", g, zg)
        j = ev.gamma
        pos_j = Gx.index(j)
        s.x[j] = 0.0
        s.a[j] = -s.zx[pos_j]
        s.inv.delete(pos_l, pos_j)
        del Gl[pos_l]
        del s.zl[pos_l]
        del Gx[pos_j]
        del s.zx[pos_j]
        return ("x-", j, None)

    # -- shared step handling ----------------------------------------------------------
    def after_primal_event(self, ev):
        """Dispatch a primal-phase event (x shrink or primal activation)."""
        s = self.s
        if ev.kind == ACTIVATE:
            g = ev.gamma
            s.p[g] = s.tau * ev.sign
            return self.dual_after_activation(g, ev.sign)
        j = ev.gamma
        s.x[j] = 0.0
        s.a[j] = -s.zx[s.Gx.index(j)]
        return self.dual_after_removal(j)

    def refresh(self, y_eff, w=None):
        """Recompute p and a from scratch (two counted products)."""
        s = self.s
        op = self.op
        s.p[:] = op.rmatvec(op.matvec(s.x) - y_eff)
        s.a[:] = op.gram(s.lam)
        self.nprod += 2
        if self.b is not None and self.eps:
            s.p += self.eps * self.b * (self.b @ s.x - w)
            s.a += self.eps * self.b * (self.b @ s.lam)
        self.rebuild_inverse()

    def polish(self, rhs_l):
        """Direct solves on the final supports; ``rhs_l`` is ``(A^T y)[G_lambda]``."""
        s = self.s
        if not s.Gx:
            return
        M = self.phi(s.Gl, s.Gx)
        xs = np.linalg.solve(M, rhs_l + s.tau * np.asarray(s.zl, dtype=float))
        ls = np.linalg.solve(M.T, -np.asarray(s.zx, dtype=float))
        # an entry that is about to enter or leave sits at zero; roundoff
        # can leave it with a tiny value of the wrong sign
        _snap(xs, s.zx)
        _snap(ls, s.zl)
        s.x[:] = 0.0
        s.x[s.Gx] = xs
        s.lam[:] = 0.0
        s.lam[s.Gl] = ls
        s.p[s.Gl] = s.tau * np.asarray(s.zl, dtype=float)
        s.a[s.Gx] = -np.asarray(s.zx, dtype=float)


def _snap(v, z):
    tiny = 1e-9 * max(1.0, float(np.abs(v).max(initial=0.0)))
    v[(v * np.asarray(z, dtype=float) < 0) & (np.abs(v) <= tiny)] = 0.0


def empty_ds_state(n, p, tau):
    return DsState(np.zeros(n), np.zeros(n), tau, [], [], [], [], ExplicitInverse(), p, np.zeros(n))


def solve_ds(A, y, tau, max_steps=None):
    """Cold-start DS homotopy from ``tau0 = ||A^T y||_inf``; returns ``(state, trace)``."""
    op = as_counting(A)
    y = np.asarray(y, dtype=float).reshape(-1)
    m, n = op.shape
    if y.shape[0] != m:
        raise ConfigError("y", f"length {y.shape[0]} does not match {m} rows")
    if not tau > 0:
        raise ConfigError("tau", "must be positive")
    trace = DsTrace()
    p = -op.rmatvec(y)
    h = -p.copy()
    tau0 = float(np.abs(p).max())
    state = empty_ds_state(n, p, tau0)
    trace.params.append(tau0)
    if tau >= tau0:
        state.tau = float(tau)
        trace.steps.append(StepEvent(0.0, TERMINAL))
        trace.nprod = 1
        return state, trace
    eng = DsEngine(op, state)
    g = int(np.argmax(np.abs(p)))
    zg = int(np.sign(p[g]))
    eng.dual_after_activation(g, zg)
    target = float(tau)
    max_steps = max_steps or 20 * n
    for it in range(max_steps):
        s = eng.s
        zl = np.asarray(s.zl, dtype=float)
        dx_x = -s.inv.solve(zl)
        dx = eng.full(s.Gx, dx_x)
        d = eng.phi_apply(s.Gx, dx_x)
        shrink = min_shrink_step(s.x, dx, s.Gx)
        act = lars_activation_step(s.p, d, s.tau, eng.off(s.Gl))
        ev = shrink if shrink.theta <= act.theta else act
        room = s.tau - target
        if ev.theta >= room:
            ev = StepEvent(room, TERMINAL)
        t = ev.theta
        s.x += t * dx
        s.p += t * d
        s.tau -= t
        trace.steps.append(ev)
        trace.params.append(s.tau)
        if ev.kind == TERMINAL:
            s.tau = target
            break
        eng.after_primal_event(ev)
        if (it + 1) % REFRESH_EVERY == 0:
            eng.refresh(y)
    else:
        raise IterationLimit(f"no convergence in {max_steps} steps")
    eng.polish(h[eng.s.Gl])
    trace.nprod = 1 + eng.nprod
    return eng.s, trace
