"""Randomized robust pricing over a finite uncertainty set.

The problem is a finite zero-sum game between the seller (rows: price
vectors) and nature (columns: parameter vectors).  Its value could be read
from one LP over the full payoff matrix, but both sides are usually far too
large to list, so double column generation grows a price pool and a scenario
pool instead:

* the primal step solves the game restricted to the price pool and adds the
  scenario that hurts the current policy most, until no scenario does;
* the dual step solves the game restricted to the scenario pool and adds the
  price vector that best answers nature's current mixture, until none does.

The exact worst case of the primal policy is a lower bound on the game value
and the exact best response to nature's mixture is an upper bound.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .demand import DemandFamily, Instance, ParamVector, PriceVector
from .errors import CapExceeded, IterationLimit
from .lp import LinearProgram, Relation, Sense, solve_lp
from .oracles import (
    PricingMethod,
    ScenarioMethod,
    SearchMode,
    _chunk_best,
    _merge,
    local_search_prices,
    mixture_price_opt,
    scenario_table,
    worst_case_discrete,
)
from .policy import DRPOResult, DualDistribution, RandomizedPolicy
from .uncertainty import ExplicitSet, FiniteSet, contains, members_array

DEFAULT_EPS = 1e-6
DEFAULT_MAX_OUTER = 100
MATRIX_CAP = 10_000_000


# ---------------------------------------------------------------------------
# matrix games


def solve_matrix_game(payoff: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Value and optimal mixed strategies of the game ``max_x min_y x' A y``.

    Returns (value, row strategy x, column strategy y).  The column strategy
    comes from the duals of the primal LP, so one solve gives both.
    """
    a = np.atleast_2d(np.asarray(payoff, dtype=float))
    n_rows, n_cols = a.shape
    scale = max(1.0, float(np.abs(a).max()))
    a_s = a / scale
    # variables [x (n_rows), t]; maximize t s.t. t - x'A[:, j] <= 0, sum x = 1
    obj = np.zeros(n_rows + 1)
    obj[-1] = 1.0
    mat = np.zeros((n_cols + 1, n_rows + 1))
    mat[:n_cols, :n_rows] = -a_s.T
    mat[:n_cols, -1] = 1.0
    mat[n_cols, :n_rows] = 1.0
    rel = (Relation.LE,) * n_cols + (Relation.EQ,)
    rhs = np.zeros(n_cols + 1)
    rhs[-1] = 1.0
    lower = np.concatenate([np.zeros(n_rows), [-np.inf]])
    upper = np.full(n_rows + 1, np.inf)
    sol = solve_lp(LinearProgram(Sense.MAX, obj, mat, rel, rhs, lower, upper))
    x = np.maximum(sol.x[:n_rows], 0.0)
    x /= x.sum()
    y = np.maximum(sol.duals[:n_cols], 0.0)
    y /= y.sum()
    return float(sol.value) * scale, x, y


def solve_matrix_game_dual(payoff: np.ndarray) -> tuple[float, np.ndarray]:
    """``min_y max_x x' A y`` solved directly as its own LP; returns (value, y)."""
    a = np.atleast_2d(np.asarray(payoff, dtype=float))
    n_rows, n_cols = a.shape
    scale = max(1.0, float(np.abs(a).max()))
    obj = np.zeros(n_cols + 1)
    obj[-1] = 1.0
    mat = np.zeros((n_rows + 1, n_cols + 1))
    mat[:n_rows, :n_cols] = -a / scale
    mat[:n_rows, -1] = 1.0
    mat[n_rows, :n_cols] = 1.0
    rel = (Relation.GE,) * n_rows + (Relation.EQ,)
    rhs = np.zeros(n_rows + 1)
    rhs[-1] = 1.0
    lower = np.concatenate([np.zeros(n_cols), [-np.inf]])
    sol = solve_lp(LinearProgram(Sense.MIN, obj, mat, rel, rhs, lower, np.full(n_cols + 1, np.inf)))
    y = np.maximum(sol.x[:n_cols], 0.0)
    return float(sol.value) * scale, y / y.sum()


def _families(uset) -> tuple[DemandFamily, ...] | None:
    return uset.families if isinstance(uset, ExplicitSet) else None


def _policy_from(instance: Instance, pool: Sequence[PriceVector], weights: np.ndarray) -> RandomizedPolicy:
    return RandomizedPolicy.from_levels(instance, [p.levels for p in pool], weights, drop_below=0.0)


def _dual_from(scenarios: Sequence[ParamVector], weights: np.ndarray) -> DualDistribution:
    keep = [(u, float(w)) for u, w in zip(scenarios, weights) if w > 0]
    total = sum(w for _, w in keep)
    return DualDistribution(tuple((u, w / total) for u, w in keep))


def full_matrix_lp_oracle(instance: Instance, prices: Sequence[PriceVector], scenarios: Sequence[ParamVector],
                          families: Sequence[DemandFamily] | None = None,
                          cap: int = MATRIX_CAP) -> tuple[float, RandomizedPolicy, DualDistribution]:
    """Exact game value over explicit price and scenario lists via one LP on the full payoff matrix."""
    size = len(prices) * len(scenarios)
    if size > cap:
        raise CapExceeded("payoff matrix", size, cap)
    table = scenario_table(instance, np.array([p.values for p in prices]),
                           np.array([u.flatten() for u in scenarios]), families)
    value, x, y = solve_matrix_game(table)
    return value, _policy_from(instance, prices, x), _dual_from(scenarios, y)


def payoff_matrix(instance: Instance, uset: FiniteSet, price_cap: int = MATRIX_CAP):
    """Full payoff matrix over all grid price vectors (lexicographic) and all set members."""
    params = members_array(uset)
    total = instance.n_price_vectors * params.shape[0]
    if total > price_cap:
        raise CapExceeded("payoff matrix", total, price_cap)
    levels = np.concatenate(list(instance.iter_level_chunks(price_cap)))
    return levels, params, scenario_table(instance, instance.prices_of(levels), params, _families(uset))


# ---------------------------------------------------------------------------
# column generation


class PrimalCGResult(NamedTuple):
    z_p: float
    scenarios: list[ParamVector]
    policy: RandomizedPolicy
    worst_case: float
    worst_case_u: ParamVector
    certified: bool
    iterations: int


class DualCGResult(NamedTuple):
    z_d: float
    prices: list[PriceVector]
    dual: DualDistribution
    best_response: float
    best_response_p: PriceVector
    certified: bool
    iterations: int


def _rel(value: float) -> float:
    return max(1.0, abs(value))


def primal_cg(instance: Instance, price_pool: Sequence[PriceVector], uset: FiniteSet,
              init_scenarios: Sequence[ParamVector], sep_method: ScenarioMethod | None = None,
              eps_sep: float = DEFAULT_EPS / 10, max_iter: int = 10_000) -> PrimalCGResult:
    """Grow the scenario pool until the policy on ``price_pool`` has no violating scenario."""
    sep_method = sep_method or ScenarioMethod.enumerate()
    fams_all = _families(uset)
    pool = list(price_pool)
    prices = np.array([p.values for p in pool])
    scenarios = list(dict.fromkeys(init_scenarios))
    certified = True
    it = 0
    while True:
        it += 1
        fams = None if fams_all is None else [fams_all[_member_index(uset, u)] for u in scenarios]
        table = scenario_table(instance, prices, np.array([u.flatten() for u in scenarios]), fams)
        t_star, x, _ = solve_matrix_game(table)
        policy = _policy_from(instance, pool, x)
        u_new, t_sep, cert = worst_case_discrete(instance, policy, uset, sep_method)
        certified &= cert
        if t_sep >= t_star - eps_sep * _rel(t_star) or u_new in scenarios or it >= max_iter:
            if it >= max_iter and t_sep < t_star - eps_sep * _rel(t_star):
                raise IterationLimit("primal column generation did not converge")
            return PrimalCGResult(t_star, scenarios, policy, t_sep, u_new, certified, it)
        scenarios.append(u_new)


def dual_cg(instance: Instance, scenario_pool: Sequence[ParamVector], init_prices: Sequence[PriceVector],
            sep_method: PricingMethod | None = None, eps_sep: float = DEFAULT_EPS / 10,
            families: Sequence[DemandFamily] | None = None, max_iter: int = 10_000) -> DualCGResult:
    """Grow the price pool until nature's mixture over ``scenario_pool`` has no better response."""
    sep_method = sep_method or PricingMethod.enumerate()
    scenarios = list(scenario_pool)
    params = np.array([u.flatten() for u in scenarios])
    pool = list(dict.fromkeys(init_prices))
    certified = sep_method.certified
    it = 0
    while True:
        it += 1
        table = scenario_table(instance, np.array([p.values for p in pool]), params, families)
        rho_star, _, y = solve_matrix_game(table)
        p_new, rho_sep, _ = mixture_price_opt(instance, list(zip(y, scenarios)), sep_method, families)
        if rho_sep <= rho_star + eps_sep * _rel(rho_star) or p_new in pool or it >= max_iter:
            if it >= max_iter and rho_sep > rho_star + eps_sep * _rel(rho_star):
                raise IterationLimit("dual column generation did not converge")
            return DualCGResult(rho_star, pool, _dual_from(scenarios, y), rho_sep, p_new, certified, it)
        pool.append(p_new)


def _member_index(uset: FiniteSet, u: ParamVector) -> int:
    for k, m in enumerate(uset.members):
        if m == u:
            return k
    raise ValueError("scenario is not a member of the explicit set")


@dataclass
class DoubleCGReport:
    lb: float
    ub: float
    policy: RandomizedPolicy
    dual: DualDistribution
    price_pool: list[PriceVector]
    scenario_pool: list[ParamVector]
    outer_iterations: int
    primal_cuts: int
    dual_cuts: int
    certified: bool
    success: bool
    wall_time: float
    lb_history: list[float] = field(default_factory=list)
    ub_history: list[float] = field(default_factory=list)

    @property
    def value(self) -> float:
        return 0.5 * (self.lb + self.ub)

    @property
    def gap(self) -> float:
        return self.ub - self.lb


def _initial_scenario(instance: Instance, uset: FiniteSet) -> ParamVector:
    if contains(uset, instance.u0, tol=0.0):
        return instance.u0
    return uset.members[0]


def solve_double_cg(instance: Instance, uset: FiniteSet, eps: float = DEFAULT_EPS,
                    max_outer: int = DEFAULT_MAX_OUTER, pricing: PricingMethod | None = None,
                    scenario_method: ScenarioMethod | None = None,
                    init_prices: Sequence[PriceVector] | None = None,
                    init_scenarios: Sequence[ParamVector] | None = None,
                    time_limit: float | None = None) -> DoubleCGReport:
    """Alternate primal and dual column generation until the bounds meet.

    Separation tolerances are ``eps / 10``.  Default pools: the nominal optimal
    price vector and the nominal parameter vector (the first member for an
    explicit set that does not contain it).
    """
    pricing = pricing or PricingMethod.enumerate()
    scenario_method = scenario_method or ScenarioMethod.enumerate()
    t0 = time.perf_counter()
    eps_sep = eps / 10
    fams_all = _families(uset)
    if init_scenarios is None:
        init_scenarios = [_initial_scenario(instance, uset)]
    if init_prices is None:
        u_init = init_scenarios[0]
        fam = None if fams_all is None else [fams_all[_member_index(uset, u_init)]]
        p0, _, _ = mixture_price_opt(instance, [(1.0, u_init)], pricing, fam)
        init_prices = [p0]
    price_pool = list(dict.fromkeys(init_prices))
    scenario_pool = list(dict.fromkeys(init_scenarios))
    lb, ub = -np.inf, np.inf
    best_policy = best_dual = None
    lb_hist, ub_hist = [], []
    certified = pricing.certified and scenario_method.certified
    primal_cuts = dual_cuts = 0
    success = False
    outer = 0
    while outer < max_outer:
        if time_limit is not None and outer > 0 and time.perf_counter() - t0 > time_limit:
            break
        outer += 1
        pr = primal_cg(instance, price_pool, uset, scenario_pool, scenario_method, eps_sep)
        primal_cuts += len(pr.scenarios) - len(scenario_pool)
        scenario_pool = pr.scenarios
        certified &= pr.certified
        if pr.worst_case > lb or best_policy is None:
            lb, best_policy = max(lb, pr.worst_case), pr.policy
        fams = None if fams_all is None else [fams_all[_member_index(uset, u)] for u in scenario_pool]
        du = dual_cg(instance, scenario_pool, price_pool, pricing, eps_sep, fams)
        dual_cuts += len(du.prices) - len(price_pool)
        price_pool = du.prices
        if du.best_response < ub or best_dual is None:
            ub, best_dual = min(ub, du.best_response), du.dual
        lb_hist.append(lb)
        ub_hist.append(ub)
        if ub - lb <= eps * _rel(ub):
            success = True
            break
    report = DoubleCGReport(lb, ub, best_policy, best_dual, price_pool, scenario_pool, outer, primal_cuts,
                            dual_cuts, certified, success, time.perf_counter() - t0, lb_hist, ub_hist)
    if not success:
        raise IterationLimit(f"double column generation stopped with gap {ub - lb:.3e}", report)
    return report


# ---------------------------------------------------------------------------
# deterministic robust pricing over a finite set


def drpo_discrete(instance: Instance, uset: FiniteSet, price_method: PricingMethod | None = None,
                  wc_method: ScenarioMethod | None = None) -> DRPOResult:
    """``max_p min_{u in U} R(p, u)``; ties go to the lexicographically smallest price vector."""
    price_method = price_method or PricingMethod.enumerate()
    wc_method = wc_method or ScenarioMethod.enumerate()
    fams = _families(uset)
    certified = price_method.certified and wc_method.certified
    if wc_method.mode is SearchMode.ENUMERATE or isinstance(uset, ExplicitSet):
        params = members_array(uset, wc_method.cap)

        def objective(prices):
            out = np.empty(prices.shape[0])
            step = max(1, (1 << 22) // max(1, params.shape[0] * instance.n_products**2))
            for s in range(0, prices.shape[0], step):
                out[s:s + step] = scenario_table(instance, prices[s:s + step], params, fams).min(axis=1)
            return out
        certified = price_method.certified
    else:
        def objective(prices):
            return np.array([
                worst_case_discrete(instance, RandomizedPolicy.point_mass(instance.price_vector(
                    instance.levels_of(row))), uset, wc_method)[1]
                for row in prices
            ])

    if price_method.mode is SearchMode.LOCAL:
        _, levels = local_search_prices(instance, objective, price_method.restarts, price_method.seed)
    else:
        # the extreme-price property does not transfer to max-min, so enumerate
        best = None
        for lv in instance.iter_level_chunks(price_method.cap, 4096):
            best = _merge(best, _chunk_best(objective(instance.prices_of(lv)), lv))
        levels = best[1]
    p = instance.price_vector(levels)
    u_wc, z, _ = worst_case_discrete(instance, RandomizedPolicy.point_mass(p), uset, wc_method)
    return DRPOResult(p, z, u_wc, certified)
