"""Online learners over the probability simplex.

All learners follow the same pull/push contract: ``next_strategy()`` is a
pure function of the current state and returns a mixed strategy, after which
``observe(u)`` feeds back a utility vector and advances the state.

MWU with step size eta > 0 plays

    x^t[a] ~ exp( eta * sum_{k < t} u^k[a] )

and the optimistic variant OMWU counts the most recent utility twice:

    x^t[a] ~ exp( eta * ( sum_{k < t} u^k[a] + u^{t-1}[a] ) )

with u^0 := 0, so both start uniform.  States store cumulative utilities
rather than log-weights, and the exponent is max-shifted before
exponentiation, so long runs neither drift nor overflow.

``rvu_diagnostic`` evaluates the regret-bounded-by-variation-in-utilities
inequality for OMWU trajectories:

    Reg(T) <= log(d)/eta + eta * sum_t ||u^t - u^{t-1}||_inf^2
              - 1/(4 eta) * sum_t ||x^t - x^{t-1}||_1^2

where regret compares against the best fixed action in hindsight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def softmax(z: np.ndarray) -> np.ndarray:
    """Max-shifted softmax; safe for exponents up to ~700 in magnitude."""
    w = np.exp(z - z.max())
    return w / w.sum()


@dataclass
class LearnerState:
    """State shared by the multiplicative-weights family.

    cum_utils holds sum_{k <= t} u^k and last_util holds u^t, both zero
    before any feedback.  ``bias`` is an optional fixed log-weight offset
    that moves the initial strategy away from uniform (softmax of ``bias``
    at t = 0); it defaults to None, i.e. a uniform start.
    """

    d: int
    eta: float
    cum_utils: np.ndarray = None
    last_util: np.ndarray = None
    t: int = 0
    bias: np.ndarray = None

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"step size must be positive, got {self.eta}")
        if self.cum_utils is None:
            self.cum_utils = np.zeros(self.d)
        if self.last_util is None:
            self.last_util = np.zeros(self.d)
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=float)
            if self.bias.shape != (self.d,):
                raise ValueError("bias must have one entry per action")


def mwu_next(state: LearnerState) -> np.ndarray:
    z = state.eta * state.cum_utils
    if state.bias is not None:
        z = z + state.bias
    return softmax(z)


def omwu_next(state: LearnerState) -> np.ndarray:
    z = state.eta * (state.cum_utils + state.last_util)
    if state.bias is not None:
        z = z + state.bias
    return softmax(z)


def advance(state: LearnerState, u) -> None:
    u = np.asarray(u, dtype=float)
    if u.shape != (state.d,):
        raise ValueError(f"utility vector has shape {u.shape}, expected ({state.d},)")
    if not np.all(np.isfinite(u)):
        raise ValueError("utility vector has non-finite entries")
    state.cum_utils = state.cum_utils + u
    state.last_util = u
    state.t += 1


class MWU:
    """Multiplicative weights update under the pull/push contract."""

    optimistic = False

    def __init__(self, d, eta, bias=None):
        self.state = LearnerState(d=d, eta=eta, bias=bias)

    @property
    def d(self):
        return self.state.d

    @property
    def eta(self):
        return self.state.eta

    def next_strategy(self) -> np.ndarray:
        return mwu_next(self.state)

    def observe(self, u) -> None:
        advance(self.state, u)


class OMWU(MWU):
    """Optimistic multiplicative weights: last utility counted twice."""

    optimistic = True

    def next_strategy(self) -> np.ndarray:
        return omwu_next(self.state)


class AnytimeMWU:
    """MWU with the horizon-free decaying step size eta_t = sqrt(log d / t).

    Standard O(sqrt(T))-regret fallback; used after a robustness switch.
    """

    def __init__(self, d):
        self.d = d
        self.cum_utils = np.zeros(d)
        self.t = 0

    def next_strategy(self) -> np.ndarray:
        eta = np.sqrt(np.log(max(self.d, 2)) / max(self.t + 1, 1))
        return softmax(eta * self.cum_utils)

    def observe(self, u) -> None:
        self.cum_utils = self.cum_utils + np.asarray(u, dtype=float)
        self.t += 1


def regret(strategies, utils) -> float:
    """Best fixed action's cumulative utility minus the realized one."""
    xs = np.asarray(strategies, dtype=float)
    us = np.asarray(utils, dtype=float)
    return float(us.sum(axis=0).max() - np.einsum("td,td->", xs, us))


def rvu_diagnostic(strategies, utils, eta) -> dict:
    """Evaluate the RVU inequality on an OMWU trajectory.

    Conventions: u^0 = 0 and x^0 = x^1 (the first movement term is zero,
    which only weakens the subtracted side).  Returns regret, the bound's
    right-hand side, and the slack rhs - regret.
    """
    xs = np.asarray(strategies, dtype=float)
    us = np.asarray(utils, dtype=float)
    if xs.ndim != 2 or len(xs) == 0 or xs.shape != us.shape:
        raise ValueError("need matching nonempty (T, d) strategy and utility arrays")
    d = xs.shape[1]
    du = np.abs(np.diff(us, axis=0, prepend=np.zeros((1, d)))).max(axis=1)
    dx = np.abs(np.diff(xs, axis=0)).sum(axis=1)
    reg = regret(xs, us)
    rhs = np.log(d) / eta + eta * float(du @ du) - float(dx @ dx) / (4.0 * eta)
    return {"regret": reg, "bound_rhs": rhs, "slack": rhs - reg}
