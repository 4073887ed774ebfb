"""Active-set bookkeeping and step-size scans shared by all homotopies."""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConstraintAlreadyViolated, DegenerateSupport, NotPositiveDefinite
from .linalg import SpdFactor, factor_add_index, factor_rank1, factor_remove_index, spd_factor

RATIO_TOL = 1e-12
INF = math.inf

SHRINK = "Shrink"
ACTIVATE = "Activate"
TERMINAL = "Terminal"


@dataclass
class StepEvent:
    theta: float
    kind: str
    gamma: int = None
    sign: int = None

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("negative step")
        if (self.kind == TERMINAL) != (self.gamma is None):
            raise ValueError("Terminal events carry no index and only they do")

    def as_tuple(self):
        return (self.theta, self.kind, self.gamma, self.sign)


def terminal(theta=INF):
    return StepEvent(theta, TERMINAL)


def _idx(G):
    return np.asarray(G, dtype=np.int64).reshape(-1)


def min_shrink_step(values, directions, G):
    """First point where some ``values[j] + t*directions[j]`` reaches zero."""
    values = np.asarray(values, dtype=float)
    directions = np.asarray(directions, dtype=float)
    theta, gamma = kernels.shrink_scan(values, directions, _idx(G), RATIO_TOL)
    if gamma < 0:
        return terminal()
    return StepEvent(theta, SHRINK, gamma, None)


def min_activation_step(p, d, bound, candidates, check=True):
    """First point where some ``|p[j] + t*d[j]|`` reaches ``bound``."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    idx = _idx(candidates)
    if check and idx.size:
        worst = np.abs(p[idx]).max()
        if worst > bound + 1e-9 * max(1.0, bound):
            raise ConstraintAlreadyViolated(f"|p| = {worst!r} exceeds bound {bound!r}")
    theta, gamma, sign = kernels.activation_scan(p, d, bound, idx, RATIO_TOL)
    if gamma < 0:
        return terminal()
    return StepEvent(theta, ACTIVATE, gamma, sign)


def lars_activation_step(p, d, bound, candidates):
    """Activation scan against a bound that itself shrinks as ``bound - t``."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    theta, gamma, sign = kernels.lars_scan(p, d, bound, _idx(candidates), RATIO_TOL)
    if gamma < 0:
        return terminal()
    return StepEvent(theta, ACTIVATE, gamma, sign)


def first_event(*events):
    """Smallest-theta event; ties go to the earlier argument."""
    best = None
    for ev in events:
        if ev is None:
            continue
        if best is None or ev.theta < best.theta:
            best = ev
    return best


class ActiveSet:
    """Support indices, their signs and a Cholesky factor of the Gram block.

    ``gram_fn(rows, cols)`` returns the requested block of the Gram matrix
    and is used for column additions and for periodic refactorization.
    """

    refactor_every = 200
    residual_limit = 1e-6

    def __init__(self, gram_fn, indices=(), signs=()):
        self.gram_fn = gram_fn
        self.indices = [int(i) for i in indices]
        self.signs = [int(s) for s in signs]
        self.updates = 0
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("duplicate support index")
        self.refactor()

    def __len__(self):
        return len(self.indices)

    def __contains__(self, j):
        return j in self.indices

    @property
    def idx(self):
        return np.asarray(self.indices, dtype=np.int64)

    @property
    def z(self):
        return np.asarray(self.signs, dtype=float)

    def position(self, j):
        return self.indices.index(j)

    def gram(self):
        idx = self.indices
        return self.gram_fn(idx, idx) if idx else np.zeros((0, 0))

    def refactor(self):
        try:
            self.factor = spd_factor(self.gram(), list(self.indices))
        except NotPositiveDefinite as exc:
            raise DegenerateSupport(str(exc)) from None
        self.updates = 0

    def residual(self):
        if not self.indices:
            return 0.0
        return float(np.abs(self.factor.gram() - self.gram()).max())

    def _bump(self):
        self.updates += 1
        if self.updates >= self.refactor_every:
            self.refactor()

    def add(self, j, sign):
        j = int(j)
        if j in self.indices:
            raise ValueError(f"index {j} already active")
        col = self.gram_fn(self.indices, [j]).reshape(-1) if self.indices else np.zeros(0)
        diag = float(self.gram_fn([j], [j])[0, 0])
        try:
            self.factor = factor_add_index(self.factor, col, diag, j)
        except NotPositiveDefinite as exc:
            raise DegenerateSupport(f"adding index {j}: {exc}") from None
        self.indices.append(j)
        self.signs.append(1 if sign > 0 else -1)
        self._bump()

    def remove(self, j):
        pos = self.position(int(j))
        self.factor = factor_remove_index(self.factor, pos)
        del self.indices[pos]
        del self.signs[pos]
        self._bump()
        return pos

    def rank1(self, v, sign):
        """Fold ``sign * v v^T`` (``v`` over the current support) into the factor."""
        try:
            self.factor = factor_rank1(self.factor, v, sign)
        except NotPositiveDefinite as exc:
            raise DegenerateSupport(str(exc)) from None
        self._bump()

    def set_sign(self, j, sign):
        self.signs[self.position(j)] = 1 if sign > 0 else -1

    def solve(self, b):
        return self.factor.solve(np.asarray(b, dtype=float))

    def check(self):
        """Refactor if the factor has drifted from the Gram block."""
        if self.residual() > self.residual_limit:
            self.refactor()
            return True
        return False

    def copy(self):
        new = ActiveSet.__new__(ActiveSet)
        new.gram_fn = self.gram_fn
        new.indices = list(self.indices)
        new.signs = list(self.signs)
        new.updates = self.updates
        new.factor = SpdFactor(self.factor.L.copy(), list(self.factor.indices), self.factor.maxdiag)
        return new
