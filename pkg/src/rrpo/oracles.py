"""Inner optimization problems used by the robust pricing solvers.

Price side: maximize revenue (or a weighted mixture of revenues over several
parameter vectors) over the finite price grid, by full enumeration, by
enumerating only the extreme price vectors (exact for log-log demand), or by a
multistart coordinate-improvement local search.

Parameter side: minimize the expected revenue of a randomized policy over an
uncertainty set, by Kelley cutting planes over an L1 ball, by enumeration of a
finite set, or by flip/swap local search over a budget set.  For a single price
vector and an L1 ball the minimum has a closed form (``point_mass_worst_case_l1``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp, softmax, xlogy

from .cutting_plane import kelley_minimize
from .demand import (
    DemandFamily,
    Instance,
    ParamVector,
    PriceVector,
    exponents,
    feature_matrix,
    price_features,
    revenue_gradients,
    revenue_table,
    revenues,
)
from .errors import EmptyInput, IterationLimit, MethodFamilyMismatch
from .policy import RandomizedPolicy
from .uncertainty import (
    DEFAULT_MEMBER_CAP,
    DiscreteBudgetSet,
    ExplicitSet,
    FiniteSet,
    L1Set,
    linear_min_over_l1,
    members_array,
)

TIE_RTOL = 1e-12
DEFAULT_PRICE_CAP = 20_000_000
_TABLE_BUDGET = 1 << 22  # scalar entries evaluated per chunk

PriceObjective = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# method descriptors


class SearchMode(str, enum.Enum):
    ENUMERATE = "enumerate"
    EXTREME = "extreme"
    LOCAL = "local"


@dataclass(frozen=True)
class PricingMethod:
    mode: SearchMode = SearchMode.ENUMERATE
    restarts: int = 0
    seed: int = 0
    cap: int = DEFAULT_PRICE_CAP

    @classmethod
    def enumerate(cls, cap: int = DEFAULT_PRICE_CAP) -> "PricingMethod":
        return cls(SearchMode.ENUMERATE, cap=cap)

    @classmethod
    def extreme(cls, cap: int = DEFAULT_PRICE_CAP) -> "PricingMethod":
        """``cap`` applies where a caller falls back to enumeration (deterministic robust pricing)."""
        return cls(SearchMode.EXTREME, cap=cap)

    @classmethod
    def local(cls, restarts: int, seed: int = 0) -> "PricingMethod":
        if restarts < 1:
            raise ValueError("local search needs at least one restart")
        return cls(SearchMode.LOCAL, restarts=restarts, seed=seed)

    @classmethod
    def parse(cls, text: str, seed: int = 0, cap: int = DEFAULT_PRICE_CAP) -> "PricingMethod":
        """``enumerate``, ``extreme`` or ``local:R``."""
        text = text.strip().lower()
        if text == "enumerate":
            return cls.enumerate(cap)
        if text == "extreme":
            return cls.extreme(cap)
        if text.startswith("local:"):
            return cls.local(int(text.split(":", 1)[1]), seed)
        raise ValueError(f"unknown pricing method {text!r}")

    @property
    def certified(self) -> bool:
        return self.mode is not SearchMode.LOCAL

    def __str__(self):
        return f"local:{self.restarts}" if self.mode is SearchMode.LOCAL else self.mode.value


@dataclass(frozen=True)
class ScenarioMethod:
    """How to search a finite uncertainty set: full enumeration or local search."""

    mode: SearchMode = SearchMode.ENUMERATE
    restarts: int = 0
    seed: int = 0
    cap: int = DEFAULT_MEMBER_CAP

    @classmethod
    def enumerate(cls, cap: int = DEFAULT_MEMBER_CAP) -> "ScenarioMethod":
        return cls(SearchMode.ENUMERATE, cap=cap)

    @classmethod
    def local(cls, restarts: int, seed: int = 0) -> "ScenarioMethod":
        if restarts < 1:
            raise ValueError("local search needs at least one restart")
        return cls(SearchMode.LOCAL, restarts=restarts, seed=seed)

    @property
    def certified(self) -> bool:
        return self.mode is SearchMode.ENUMERATE


# ---------------------------------------------------------------------------
# log-sum-exp


@dataclass(frozen=True)
class BiconjugateResult:
    value: float
    mu: np.ndarray


def logsumexp_biconjugate(y: Sequence[float]) -> BiconjugateResult:
    """``log sum exp(y)`` together with its maximizing simplex weights.

    ``log sum exp(y) = max_{mu in simplex} mu.y - sum mu log mu``, attained at
    ``mu = softmax(y)``.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size == 0:
        raise EmptyInput("log-sum-exp of an empty vector")
    if not np.all(np.isfinite(y)):
        raise ValueError("log-sum-exp inputs must be finite")
    return BiconjugateResult(float(logsumexp(y)), softmax(y))


def entropy_objective(mu: np.ndarray, y: np.ndarray) -> float:
    """``mu.y - sum mu log mu`` with ``0 log 0 = 0``."""
    mu = np.asarray(mu, dtype=float)
    return float(mu @ np.asarray(y, dtype=float) - xlogy(mu, mu).sum())


# ---------------------------------------------------------------------------
# revenue tables with optional per-scenario families


def scenario_table(instance: Instance, prices: np.ndarray, params: np.ndarray,
                   families: Sequence[DemandFamily] | None = None) -> np.ndarray:
    """(n, m) revenues for n price rows and m flattened parameter rows."""
    prices = np.atleast_2d(prices)
    params = np.atleast_2d(params)
    if families is None:
        return revenue_table(instance.family, prices, params)
    out = np.empty((prices.shape[0], params.shape[0]))
    fams = np.array([DemandFamily.parse(f).value for f in families])
    for fam in np.unique(fams):
        cols = np.flatnonzero(fams == fam)
        out[:, cols] = revenue_table(DemandFamily(fam), prices, params[cols])
    return out


def _set_families(uset) -> tuple[DemandFamily, ...] | None:
    return uset.families if isinstance(uset, ExplicitSet) else None


def policy_values(instance: Instance, policy: RandomizedPolicy, params: np.ndarray,
                  families: Sequence[DemandFamily] | None = None) -> np.ndarray:
    """Expected revenue of ``policy`` under each parameter row."""
    params = np.atleast_2d(params)
    out = np.empty(params.shape[0])
    step = max(1, _TABLE_BUDGET // max(1, len(policy) * instance.n_products**2))
    for start in range(0, params.shape[0], step):
        fam = None if families is None else families[start:start + step]
        out[start:start + step] = policy.probs @ scenario_table(instance, policy.prices, params[start:start + step], fam)
    return out


def policy_value(instance: Instance, policy: RandomizedPolicy, u: ParamVector,
                 family: DemandFamily | None = None) -> float:
    fams = None if family is None else [family]
    return float(policy_values(instance, policy, u.flatten()[None, :], fams)[0])


# ---------------------------------------------------------------------------
# price search


def _tie_tol(value: float) -> float:
    return TIE_RTOL * max(1.0, abs(value))


def _chunk_best(values: np.ndarray, levels: np.ndarray) -> tuple[float, tuple[int, ...]]:
    """Best value in a chunk; among near-ties, the lexicographically smallest level vector."""
    top = float(values.max())
    near = np.flatnonzero(values >= top - _tie_tol(top))
    cand = levels[near]
    order = np.lexsort(cand.T[::-1])
    k = near[order[0]]
    return float(values[k]), tuple(int(x) for x in levels[k])


def _merge(best: tuple[float, tuple[int, ...]] | None, cand: tuple[float, tuple[int, ...]]):
    if best is None:
        return cand
    bv, bl = best
    cv, cl = cand
    if cv > bv + _tie_tol(bv):
        return cand
    if cv >= bv - _tie_tol(bv) and cl < bl:
        return cand
    return best


def search_prices(instance: Instance, objective: PriceObjective, method: PricingMethod,
                  row_cost: int = 1, extreme_ok: bool = False) -> tuple[PriceVector, float, bool]:
    """Maximize ``objective`` over the price grid with the requested method."""
    if method.mode is SearchMode.EXTREME:
        if not extreme_ok:
            raise MethodFamilyMismatch("extreme-price search is only exact for log-log demand")
        levels = instance.extreme_levels()
        best = _chunk_best(objective(instance.prices_of(levels)), levels)
        return instance.price_vector(best[1]), best[0], True
    if method.mode is SearchMode.LOCAL:
        value, levels = local_search_prices(instance, objective, method.restarts, method.seed)
        return instance.price_vector(levels), value, False
    chunk = int(min(262_144, max(256, _TABLE_BUDGET // max(1, row_cost))))
    best = None
    for levels in instance.iter_level_chunks(method.cap, chunk):
        best = _merge(best, _chunk_best(objective(instance.prices_of(levels)), levels))
    return instance.price_vector(best[1]), best[0], True


def local_search_prices(instance: Instance, objective: PriceObjective, restarts: int,
                        seed: int) -> tuple[float, tuple[int, ...]]:
    """Multistart coordinate improvement over price levels.

    Each restart starts from uniformly random levels drawn from its own child
    seed, then sweeps products in order; for each product every level is tried
    with the others fixed and the best is kept (lowest level among ties) if it
    improves.  Sweeps repeat until one full sweep makes no improvement.  All
    restarts advance together as one vectorized batch, and the result does not
    depend on that batching.
    """
    sizes = instance.grid_sizes
    n_products = instance.n_products
    children = np.random.SeedSequence(seed).spawn(restarts)
    cur = np.array([[np.random.default_rng(ch).integers(0, s) for s in sizes] for ch in children],
                   dtype=np.intp).reshape(restarts, n_products)
    vals = objective(instance.prices_of(cur))
    active = np.ones(restarts, dtype=bool)
    while active.any():
        improved = np.zeros(restarts, dtype=bool)
        for i in range(n_products):
            idx = np.flatnonzero(active)
            k = sizes[i]
            cand = np.repeat(cur[idx], k, axis=0)
            cand[:, i] = np.tile(np.arange(k), idx.size)
            cv = objective(instance.prices_of(cand)).reshape(idx.size, k)
            top = cv.max(axis=1)
            tol = TIE_RTOL * np.maximum(1.0, np.abs(top))
            best_level = np.argmax(cv >= (top - tol)[:, None], axis=1)
            gain = top > vals[idx] + TIE_RTOL * np.maximum(1.0, np.abs(vals[idx]))
            rows = idx[gain]
            cur[rows, i] = best_level[gain]
            vals[rows] = cv[gain, best_level[gain]]
            improved[rows] = True
        active = improved
    return _chunk_best(vals, cur)


def _check_extreme(instance: Instance, families) -> bool:
    fams = [instance.family] if families is None else list(families)
    return all(DemandFamily.parse(f) is DemandFamily.LOGLOG for f in fams)


def nominal_price_opt(instance: Instance, u: ParamVector,
                      method: PricingMethod | None = None) -> tuple[PriceVector, float, bool]:
    """``max_p R(p, u)`` over the grid; returns (price vector, revenue, certified)."""
    method = method or PricingMethod.enumerate()
    return search_prices(instance, lambda prices: revenues(instance.family, prices, u), method,
                         row_cost=instance.n_products**2, extreme_ok=_check_extreme(instance, None))


def mixture_price_opt(instance: Instance, scenarios: Sequence[tuple[float, ParamVector]],
                      method: PricingMethod | None = None,
                      families: Sequence[DemandFamily] | None = None) -> tuple[PriceVector, float, bool]:
    """``max_p sum_k w_k R(p, u_k)`` over the grid.

    For log-log demand every term is the exponential of an affine function of
    log prices, so the mixture is convex in log prices and the extreme-price
    search stays exact.
    """
    method = method or PricingMethod.enumerate()
    if not scenarios:
        raise EmptyInput("mixture needs at least one scenario")
    w = np.array([float(s[0]) for s in scenarios])
    if np.any(w < 0):
        raise ValueError("mixture weights must be nonnegative")
    params = np.array([s[1].flatten() for s in scenarios])
    fams = None if families is None else tuple(DemandFamily.parse(f) for f in families)
    if fams is not None and len(set(fams)) == 1:
        fam_single = fams[0]
    elif fams is None:
        fam_single = instance.family
    else:
        fam_single = None
    if fam_single is DemandFamily.LINEAR:
        # revenue is linear in u, so the mixture equals revenue at the averaged parameters
        u_bar = ParamVector.from_flat(w @ params, instance.n_products)

        def objective(prices):
            return revenues(DemandFamily.LINEAR, prices, u_bar)

        cost = instance.n_products**2
    else:
        def objective(prices):
            return scenario_table(instance, prices, params, fams) @ w

        cost = params.shape[0] * instance.n_products**2
    return search_prices(instance, objective, method, row_cost=cost, extreme_ok=_check_extreme(instance, fams))


# ---------------------------------------------------------------------------
# parameter-side worst cases


def _policy_oracle(instance: Instance, policy: RandomizedPolicy):
    prices = policy.prices
    probs = policy.probs
    n_products = instance.n_products

    def oracle(u_flat: np.ndarray):
        u = ParamVector.from_flat(u_flat, n_products)
        f = float(probs @ revenues(instance.family, prices, u))
        g = probs @ revenue_gradients(instance.family, prices, u)
        return f, g, None

    return oracle


def worst_case_convex(instance: Instance, policy: RandomizedPolicy, uset: L1Set, tol: float = 1e-9,
                      max_iter: int = 500) -> tuple[ParamVector, float, float]:
    """``min_{u in U} sum_p pi_p R(p, u)`` over an L1 ball.

    Returns (minimizer, value at the minimizer, certified gap).  The value is
    the true objective at the returned point, so it is an upper bound on the
    minimum and ``value - gap`` is a lower bound.  Raises ``IterationLimit``
    (with the best triple in ``.result``) when the gap does not close.
    """
    n_products = instance.n_products
    if instance.family is DemandFamily.LINEAR:
        u0 = uset.u0
        grad = policy.probs @ revenue_gradients(instance.family, policy.prices, u0)
        u_star, shift = linear_min_over_l1(uset, grad)
        return u_star, policy_value(instance, policy, u_star), 0.0
    res = kelley_minimize(uset, _policy_oracle(instance, policy), tol=tol, max_iter=max_iter)
    out = (ParamVector.from_flat(res.u_best, n_products), res.upper, res.gap)
    if not res.converged:
        raise IterationLimit(f"worst-case search stopped with gap {res.gap:.3e} after {res.iterations} cuts", out)
    return out


def _block_max_sensitivity(instance: Instance, prices: np.ndarray, uset: L1Set) -> tuple[np.ndarray, np.ndarray]:
    """Per product: largest ``|phi_k(p) u0_k|`` over the coordinates it owns, and the flat index attaining it.

    Frozen coordinates contribute zero.  Ties go to the lowest flat index.
    """
    n_products = instance.n_products
    x = price_features(instance.family, prices)
    n = x.shape[0]
    c = np.where(uset.free_mask, uset.center, 0.0)
    alpha0, beta0 = np.abs(c[:n_products]), np.abs(c[n_products:2 * n_products])
    gamma0 = np.zeros((n_products, n_products))
    off = ~np.eye(n_products, dtype=bool)
    gamma0[off] = np.abs(c[2 * n_products:])
    # columns: alpha, beta, then gamma_{i,j} for every j (the zero diagonal never wins the max);
    # rows are processed in cache-sized blocks through one reused buffer
    abs_x = np.abs(x)
    m = np.empty((n, n_products))
    pos = np.empty((n, n_products), dtype=np.intp)
    block = 2048
    cand = np.empty((min(n, block), n_products, n_products + 2))
    cand[:, :, 0] = alpha0
    for start in range(0, n, block):
        stop = min(n, start + block)
        buf = cand[:stop - start]
        ax = abs_x[start:stop]
        np.multiply(beta0, ax, out=buf[:, :, 1])
        np.multiply(ax[:, None, :], gamma0[None, :, :], out=buf[:, :, 2:])
        p_blk = np.argmax(buf, axis=2)
        pos[start:stop] = p_blk
        m[start:stop] = np.take_along_axis(buf, p_blk[:, :, None], axis=2)[:, :, 0]
    idx = np.arange(n_products)[None, :]
    j = pos - 2
    gamma_flat = 2 * n_products + idx * (n_products - 1) + np.where(j < idx, j, j - 1)
    flat = np.where(pos == 0, idx, np.where(pos == 1, n_products + idx, gamma_flat))
    return m, flat


def point_mass_worst_case_l1(instance: Instance, prices: np.ndarray, uset: L1Set,
                             return_argmin: bool = False):
    """Exact ``min_{u in U} R(p, u)`` for each row of ``prices``.

    Each coordinate moves only its owner's exponent, linearly in the relative
    deviation.  Within product ``i`` a deviation budget ``t_i`` therefore
    lowers the exponent by at most ``m_i t_i`` with ``m_i`` the largest
    sensitivity the product owns.  For the exponential families the remaining
    problem ``min sum_i A_i exp(-m_i t_i)`` subject to ``sum t_i <= theta`` is
    separable and convex; its KKT conditions give a water-filling solution.
    For linear demand the whole budget goes to the single most sensitive
    coordinate.
    """
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    n, n_products = prices.shape
    fam = instance.family
    u0 = uset.u0
    theta = uset.theta
    m, arg = _block_max_sensitivity(instance, prices, uset)
    t = np.zeros((n, n_products))
    if fam is DemandFamily.LINEAR:
        weighted = m * prices
        top_i = np.argmax(weighted, axis=1)
        top = weighted[np.arange(n), top_i]
        values = revenues(fam, prices, u0) - theta * top
        if theta > 0:
            t[np.arange(n), top_i] = np.where(top > 0, theta, 0.0)
    else:
        log_a = np.log(prices) + exponents(fam, prices, u0)
        if theta > 0:
            active_ok = m > 0
            with np.errstate(divide="ignore"):
                level = np.where(active_ok, log_a + np.log(np.where(active_ok, m, 1.0)), -np.inf)
            order = np.argsort(-level, axis=1, kind="stable")
            ls = np.take_along_axis(level, order, axis=1)
            ms = np.take_along_axis(m, order, axis=1)
            valid = np.isfinite(ls)
            inv = np.where(valid, 1.0 / np.where(valid, ms, 1.0), 0.0)
            num = np.cumsum(np.where(valid, ls * inv, 0.0), axis=1)
            den = np.cumsum(inv, axis=1)
            with np.errstate(invalid="ignore", divide="ignore"):
                x = (num - theta) / den
            use = valid & (ls > x)
            k_count = use.sum(axis=1)
            has = k_count > 0
            x_star = np.where(has, x[np.arange(n), np.maximum(k_count - 1, 0)], np.inf)
            with np.errstate(invalid="ignore"):
                t = np.where(active_ok, np.maximum(0.0, (level - x_star[:, None]) / np.where(active_ok, m, 1.0)), 0.0)
            t = np.where(has[:, None], t, 0.0)
        values = np.exp(log_a - m * t).sum(axis=1)
    if not return_argmin:
        return values
    feats = feature_matrix(fam, prices)
    args = []
    for r in range(n):
        u = uset.center.copy()
        for i in range(n_products):
            if t[r, i] > 0:
                k = arg[r, i]
                # move against the sign of the exponent's sensitivity
                u[k] = u[k] * (1.0 - np.sign(feats[r, k] * uset.center[k]) * t[r, i])
        args.append(ParamVector.from_flat(u, n_products))
    return values, args


def _budget_state_params(uset: DiscreteBudgetSet, states: np.ndarray) -> np.ndarray:
    c, hi, lo = uset.u0.flatten(), uset.u_hi.flatten(), uset.u_lo.flatten()
    return np.where(states == 1, hi, np.where(states == 2, lo, c))


def _budget_neighbors(state: np.ndarray, budget: int) -> np.ndarray:
    """All states one move away: unflip, switch high/low, flip a new coordinate, or swap positions."""
    d = state.size
    moved = np.flatnonzero(state)
    still = np.flatnonzero(state == 0)
    out = []
    for s in moved:
        z = state.copy(); z[s] = 0; out.append(z)
        z = state.copy(); z[s] = 3 - state[s]; out.append(z)
    if moved.size < budget:
        for k in still:
            for v in (1, 2):
                z = state.copy(); z[k] = v; out.append(z)
    for s in moved:
        for k in still:
            for v in (1, 2):
                z = state.copy(); z[s] = 0; z[k] = v; out.append(z)
    return np.array(out, dtype=np.int8).reshape(-1, d)


def _local_search_budget(instance: Instance, policy: RandomizedPolicy, uset: DiscreteBudgetSet,
                         restarts: int, seed: int) -> tuple[np.ndarray, float]:
    d = uset.dim
    budget = min(uset.gamma_budget, d)
    best = None
    for r, child in enumerate(np.random.SeedSequence(seed).spawn(restarts)):
        rng = np.random.default_rng(child)
        state = np.zeros(d, dtype=np.int8)
        if r > 0 and budget > 0:
            pos = rng.choice(d, size=budget, replace=False)
            state[pos] = rng.integers(1, 3, size=budget)
        value = float(policy_values(instance, policy, _budget_state_params(uset, state[None, :]))[0])
        while True:
            nb = _budget_neighbors(state, budget)
            if nb.shape[0] == 0:
                break
            vals = policy_values(instance, policy, _budget_state_params(uset, nb))
            k = int(np.argmin(vals))
            if vals[k] < value - TIE_RTOL * max(1.0, abs(value)):
                state, value = nb[k], float(vals[k])
            else:
                break
        if best is None or value < best[1] - TIE_RTOL * max(1.0, abs(best[1])):
            best = (state, value)
    return _budget_state_params(uset, best[0][None, :])[0], best[1]


def worst_case_discrete(instance: Instance, policy: RandomizedPolicy, uset: FiniteSet,
                        method: ScenarioMethod | None = None) -> tuple[ParamVector, float, bool]:
    """``min_{u in U} sum_p pi_p R(p, u)`` over a finite set; returns (minimizer, value, certified).

    Enumeration returns the first minimizer in the set's canonical order.
    Explicit sets are always enumerated.
    """
    method = method or ScenarioMethod.enumerate()
    n_products = instance.n_products
    if isinstance(uset, DiscreteBudgetSet) and method.mode is SearchMode.LOCAL:
        u, value = _local_search_budget(instance, policy, uset, method.restarts, method.seed)
        return ParamVector.from_flat(u, n_products), value, False
    params = members_array(uset, method.cap)
    vals = policy_values(instance, policy, params, _set_families(uset))
    k = int(np.argmin(vals))
    return ParamVector.from_flat(params[k], n_products), float(vals[k]), True
