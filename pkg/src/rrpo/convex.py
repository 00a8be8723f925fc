"""Randomized and deterministic robust pricing over an L1 uncertainty ball.

The randomized value equals ``min_{u in U} max_p R(p, u)`` because the policy
simplex is compact and convex, ``U`` is convex and the expected revenue is
linear in the policy and convex in ``u``.  ``phi(u) = max_p R(p, u)`` is convex,
so Kelley's method applies: each iterate calls the pricing oracle, whose
maximizer supplies a supporting cut ``R(p_k, u_k) + grad . (u - u_k)``.  The
master LP gives a lower bound and the best evaluated ``phi`` an upper bound.

The optimal policy is read off the master duals: weights on cut rows,
aggregated by originating price vector.  Since every cut underestimates its
revenue function, the worst case of this policy is at least the master lower
bound.  The policy is nevertheless re-evaluated with an independent worst-case
search and repaired if the check fails.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
import numpy as np

from .cutting_plane import kelley_minimize
from .demand import Instance, ParamVector, revenue_gradient_u
from .discrete import solve_matrix_game
from .errors import IterationLimit
from .oracles import (
    PricingMethod,
    SearchMode,
    _chunk_best,
    _merge,
    local_search_prices,
    nominal_price_opt,
    point_mass_worst_case_l1,
    revenue_table,
    worst_case_convex,
)
from .policy import DRPOResult, RandomizedPolicy
from .uncertainty import L1Set

DEFAULT_EPS = 1e-6
DEFAULT_MAX_ITER = 500
_DROP_WEIGHT = 1e-12


@dataclass
class ConvexSolveReport:
    z_rr_lower: float
    z_rr_upper: float
    policy: RandomizedPolicy
    u_star: ParamVector
    iterations: int
    cuts: int
    prices_generated: int
    wall_time: float
    success: bool
    certified: bool
    policy_worst_case: float
    policy_worst_case_u: ParamVector
    repaired: bool = False
    lower_history: list[float] = field(default_factory=list)
    upper_history: list[float] = field(default_factory=list)

    @property
    def z_rr(self) -> float:
        """Point estimate: the upper end of the bracket (attained by ``u_star``)."""
        return self.z_rr_upper

    @property
    def gap(self) -> float:
        return self.z_rr_upper - self.z_rr_lower


def _validate_policy(instance: Instance, policy: RandomizedPolicy, uset: L1Set, eps: float,
                     max_iter: int) -> tuple[ParamVector, float, float]:
    try:
        return worst_case_convex(instance, policy, uset, tol=eps / 10, max_iter=max_iter)
    except IterationLimit as exc:
        return exc.result


def _restricted_primal(instance: Instance, levels: list[tuple[int, ...]], params: np.ndarray) -> RandomizedPolicy:
    """Best mixture over a finite price pool against a finite set of parameter vectors."""
    prices = instance.prices_of(np.array(levels))
    table = revenue_table(instance.family, prices, params)
    _, x, _ = solve_matrix_game(table)
    return RandomizedPolicy.from_levels(instance, levels, x, drop_below=_DROP_WEIGHT)


def solve_rrpo_convex(instance: Instance, uset: L1Set, eps: float = DEFAULT_EPS,
                      max_iter: int = DEFAULT_MAX_ITER, pricing: PricingMethod | None = None,
                      time_limit: float | None = None) -> ConvexSolveReport:
    """Randomized robust pricing over an L1 ball; returns a certified bracket and a policy.

    Raises ``IterationLimit`` carrying the partial report when the bracket is
    not closed within ``max_iter`` iterations or ``time_limit`` seconds.
    """
    pricing = pricing or PricingMethod.enumerate()
    t0 = time.perf_counter()
    n_products = instance.n_products
    certified = pricing.certified
    iterates: list[np.ndarray] = []

    def oracle(u_flat: np.ndarray):
        u = ParamVector.from_flat(u_flat, n_products)
        p, value, _ = nominal_price_opt(instance, u, pricing)
        iterates.append(u_flat.copy())
        return value, revenue_gradient_u(instance, p, u), p.levels

    deadline = None if time_limit is None else t0 + time_limit
    res = kelley_minimize(uset, oracle, tol=eps, max_iter=max_iter, deadline=deadline)
    lower, upper = res.lower, res.upper
    levels_generated = {tag for tag in res.tags}

    # policy from the master duals, aggregated by price vector
    tags = res.tags[:res.cut_weights.size]
    if res.cut_weights.sum() > 0:
        policy = RandomizedPolicy.from_levels(instance, tags, res.cut_weights, drop_below=_DROP_WEIGHT)
    else:
        # stopped before the first master solve
        policy = RandomizedPolicy.point_mass(instance.price_vector(res.tags[0]))
    u_wc, wc_value, wc_gap = _validate_policy(instance, policy, uset, eps, max_iter)
    repaired = False
    slack = eps * max(1.0, abs(upper))
    if wc_value < lower - slack:
        # dual weights unreliable (degenerate master): re-optimize over the generated prices
        pool = sorted(levels_generated)
        params = np.array(iterates + [u_wc.flatten()])
        for _ in range(max_iter):
            policy = _restricted_primal(instance, pool, params)
            u_wc, wc_value, wc_gap = _validate_policy(instance, policy, uset, eps, max_iter)
            if wc_value >= lower - slack:
                break
            params = np.vstack([params, u_wc.flatten()])
        repaired = True
    success = res.converged
    report = ConvexSolveReport(
        z_rr_lower=lower,
        z_rr_upper=upper,
        policy=policy,
        u_star=ParamVector.from_flat(res.u_best, n_products),
        iterations=res.iterations,
        cuts=len(res.tags),
        prices_generated=len(levels_generated),
        wall_time=time.perf_counter() - t0,
        success=success,
        certified=certified and success,
        policy_worst_case=wc_value,
        policy_worst_case_u=u_wc,
        repaired=repaired,
        lower_history=res.lower_history,
        upper_history=res.upper_history,
    )
    if not success:
        raise IterationLimit(
            f"cutting planes stopped with bracket [{lower:.9g}, {upper:.9g}] after {res.iterations} iterations",
            report)
    return report


def solve_drpo_convex(instance: Instance, uset: L1Set, pricing: PricingMethod | None = None) -> DRPOResult:
    """Best single price vector against its own worst case in the ball.

    The inner minimum is the exact closed form of ``point_mass_worst_case_l1``,
    so the result is certified whenever the outer search enumerates.  The
    extreme-price shortcut does not carry over to this max-min problem, so an
    ``extreme`` request is served by full enumeration.
    """
    pricing = pricing or PricingMethod.enumerate()

    def objective(prices: np.ndarray) -> np.ndarray:
        return point_mass_worst_case_l1(instance, prices, uset)

    if pricing.mode is SearchMode.LOCAL:
        value, levels = local_search_prices(instance, objective, pricing.restarts, pricing.seed)
        certified = False
    else:
        cap = pricing.cap
        best = None
        for lv in instance.iter_level_chunks(cap, 65536):
            best = _merge(best, _chunk_best(objective(instance.prices_of(lv)), lv))
        value, levels = best
        certified = True
    p = instance.price_vector(levels)
    values, args = point_mass_worst_case_l1(instance, p.prices[None, :], uset, return_argmin=True)
    return DRPOResult(p, float(values[0]), args[0], certified)
