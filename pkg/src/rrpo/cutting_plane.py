"""Kelley's cutting-plane method for convex minimization over an L1 ball.

The caller supplies an oracle returning the function value at ``u``, a
gradient, and an opaque tag.  The tag is kept with each cut so callers can
aggregate the final master duals by origin (for example by price vector).

The master LP is written in relative-deviation coordinates
``r_k = (u_k - u0_k) / u0_k`` with the epigraph variable divided by the
function value at the center, so every coefficient is of order one even when
revenues run into the hundreds of thousands.  Deviations are split as
``r = r+ - r-`` and the ball is the single row ``sum(r+ + r-) <= theta``,
which keeps the master at one row per cut.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import NumericalFailure
from .lp import LinearProgram, Relation, Sense, SimplexOptions, solve_lp
from .uncertainty import L1Set

# cuts must be separated well below the requested relative gap
MASTER_OPTIONS = SimplexOptions(feas_tol=1e-12, opt_tol=1e-12)
# iterations without progress on either bound before giving up; relative
# gaps much below 1e-10 sit under the master's precision and stall here
STALL_LIMIT = 15

Oracle = Callable[[np.ndarray], tuple[float, np.ndarray, Any]]


@dataclass
class KelleyResult:
    u_best: np.ndarray
    upper: float
    lower: float
    iterations: int
    converged: bool
    tags: list[Any] = field(default_factory=list)
    cut_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lower_history: list[float] = field(default_factory=list)
    upper_history: list[float] = field(default_factory=list)
    stop_reason: str = "converged"  # or max_iter, deadline, stalled, numerical

    @property
    def gap(self) -> float:
        return max(self.upper - self.lower, 0.0)


def _ball_rows(n_free: int, theta: float):
    """The ball as ``sum(r+ + r-) <= theta`` over ``[r+ (n_free), r- (n_free), t]``, all but t nonnegative."""
    nv = 2 * n_free + 1
    rows = np.zeros((1, nv))
    rows[0, :2 * n_free] = 1.0
    lower = np.concatenate([np.zeros(2 * n_free), [-np.inf]])
    upper = np.full(nv, np.inf)
    return rows, (Relation.LE,), np.array([theta]), lower, upper


def kelley_minimize(uset: L1Set, oracle: Oracle, tol: float = 1e-9, max_iter: int = 500,
                    deadline: float | None = None) -> KelleyResult:
    """Minimize a convex function over ``uset`` to relative gap ``tol``.

    ``cut_weights`` are the multipliers of the cut rows in the last master LP;
    they are nonnegative and sum to one.  ``deadline`` is a
    ``time.perf_counter()`` value after which the loop stops unconverged.  The
    loop also stops unconverged when neither bound moves for ``STALL_LIMIT``
    iterations or the master LP breaks down numerically; ``stop_reason`` says
    which.
    """
    center = uset.center
    free = np.flatnonzero(uset.free_mask)
    nf = free.size
    base_a, base_rel, base_b, lower_b, upper_b = _ball_rows(nf, uset.theta)
    nv = 2 * nf + 1
    objective = np.zeros(nv)
    objective[-1] = 1.0

    def to_u(r: np.ndarray) -> np.ndarray:
        u = center.copy()
        u[free] = center[free] * (1.0 + r)
        return u

    cut_rows: list[np.ndarray] = []
    cut_rhs: list[float] = []
    tags: list[Any] = []

    r = np.zeros(nf)
    u = center.copy()
    f, g, tag = oracle(u)
    scale = max(1.0, abs(float(f)))
    best_u, upper = u.copy(), float(f)
    lower = -np.inf
    weights = np.zeros(0)
    lower_hist: list[float] = []
    upper_hist: list[float] = [upper]
    converged = False
    reason = "max_iter"
    stall = 0
    it = 0

    def add_cut(r_pt, value, grad, tag):
        # t >= value/scale + (grad*u0/scale) . (r - r_pt)
        slope = grad[free] * center[free] / scale
        row = np.zeros(nv)
        row[:nf] = slope
        row[nf:2 * nf] = -slope
        row[-1] = -1.0
        cut_rows.append(row)
        cut_rhs.append(float(slope @ r_pt - value / scale))
        tags.append(tag)

    def done() -> bool:
        return upper - lower <= tol * max(1.0, abs(upper))

    add_cut(r, f, g, tag)
    while it < max_iter:
        if deadline is not None and time.perf_counter() > deadline:
            reason = "deadline"
            break
        it += 1
        a = np.vstack([base_a, np.array(cut_rows)])
        rel = base_rel + (Relation.LE,) * len(cut_rows)
        b = np.concatenate([base_b, cut_rhs])
        try:
            sol = solve_lp(LinearProgram(Sense.MIN, objective, a, rel, b, lower_b, upper_b), MASTER_OPTIONS)
        except NumericalFailure:
            sol = None
        if sol is None or not sol.optimal:
            # the master is always feasible and bounded, so this is round-off
            reason = "numerical"
            break
        prev_lower, prev_upper = lower, upper
        lower = max(lower, float(sol.value) * scale)
        weights = np.maximum(-sol.duals[base_b.size:], 0.0)
        lower_hist.append(lower)
        if done():
            converged = True
            break
        r = np.clip(sol.x[:nf] - sol.x[nf:2 * nf], -uset.theta, uset.theta)
        if np.abs(r).sum() > uset.theta:
            r *= uset.theta / np.abs(r).sum()
        u = to_u(r)
        f, g, tag = oracle(u)
        if f < upper:
            best_u, upper = u.copy(), float(f)
        upper_hist.append(upper)
        if done():
            converged = True
            break
        moved = lower > prev_lower + 1e-3 * (prev_upper - prev_lower) or upper < prev_upper
        stall = 0 if moved else stall + 1
        if stall >= STALL_LIMIT:
            reason = "stalled"
            break
        add_cut(r, f, g, tag)
    total = weights.sum()
    if total > 0:
        weights = weights / total
    if converged:
        reason = "converged"
    return KelleyResult(best_u, upper, min(lower, upper), it, converged, tags, weights, lower_hist, upper_hist,
                        reason)
