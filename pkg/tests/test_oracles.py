import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog, minimize

from conftest import random_params
from rrpo import (
    DiscreteBudgetSet,
    ExplicitSet,
    Instance,
    L1Set,
    ParamVector,
    PricingMethod,
    RandomizedPolicy,
    ScenarioMethod,
    enumerate_discrete,
    logsumexp_biconjugate,
    mixture_price_opt,
    nominal_price_opt,
    point_mass_worst_case_l1,
    revenue,
    worst_case_convex,
    worst_case_discrete,
)
from rrpo.errors import CapExceeded, EmptyInput, IterationLimit, MethodFamilyMismatch
from rrpo.oracles import entropy_objective, policy_value


@settings(max_examples=200, deadline=None)
@given(y=st.lists(st.floats(-50, 50), min_size=1, max_size=12))
def test_logsumexp_biconjugate_identity(y):
    res = logsumexp_biconjugate(y)
    y = np.array(y)
    direct = y.max() + np.log(np.exp(y - y.max()).sum())
    assert res.value == pytest.approx(direct, abs=1e-10)
    assert res.mu.sum() == pytest.approx(1.0, abs=1e-12)
    assert entropy_objective(res.mu, y) == pytest.approx(res.value, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(y=st.lists(st.floats(-5, 5), min_size=2, max_size=6), seed=st.integers(0, 2**32 - 1))
def test_entropy_objective_is_below_logsumexp(y, seed):
    mu = np.random.default_rng(seed).dirichlet(np.ones(len(y)))
    assert entropy_objective(mu, y) <= logsumexp_biconjugate(y).value + 1e-12


def test_logsumexp_rejects_empty():
    with pytest.raises(EmptyInput):
        logsumexp_biconjugate([])


def _brute_nominal(inst, u):
    best = None
    for levels in itertools.product(*[range(g.size) for g in inst.grids]):
        p = inst.price_vector(levels)
        r = revenue(inst, p, u)
        if best is None or r > best[1] + 1e-12 * max(1, abs(best[1])):
            best = (p, r)
    return best


@settings(max_examples=40, deadline=None)
@given(family=st.sampled_from(["linear", "semilog", "loglog"]), seed=st.integers(0, 2**32 - 1))
def test_nominal_enumeration_matches_brute_force(family, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    u = random_params(rng, family, n)
    inst = Instance(family, [np.sort(rng.uniform(0.5, 5, rng.integers(1, 4))) for _ in range(n)], u)
    p, value, certified = nominal_price_opt(inst, u)
    ref_p, ref_value = _brute_nominal(inst, u)
    assert certified
    assert value == pytest.approx(ref_value, rel=1e-12)
    assert p.levels == ref_p.levels


def test_extreme_search_refused_for_non_loglog():
    u = ParamVector([10], [1], [[0]])
    inst = Instance("semilog", [[1.0, 2.0, 3.0]], u)
    with pytest.raises(MethodFamilyMismatch):
        nominal_price_opt(inst, u, PricingMethod.extreme())


def test_local_search_is_a_lower_bound_and_uncertified():
    rng = np.random.default_rng(3)
    u = random_params(rng, "semilog", 4)
    inst = Instance("semilog", [np.arange(1.0, 6.0)] * 4, u)
    _, exact, _ = nominal_price_opt(inst, u)
    _, approx, certified = nominal_price_opt(inst, u, PricingMethod.local(3, seed=1))
    assert not certified
    assert approx <= exact + 1e-12


def test_enumeration_cap():
    u = ParamVector([10] * 3, [1] * 3, np.zeros((3, 3)))
    inst = Instance("linear", [np.arange(1.0, 11.0)] * 3, u)
    with pytest.raises(CapExceeded) as info:
        nominal_price_opt(inst, u, PricingMethod.enumerate(cap=999))
    assert info.value.cardinality == 1000


def test_pricing_method_parse():
    assert str(PricingMethod.parse("local:4")) == "local:4"
    assert PricingMethod.parse("extreme", cap=7).cap == 7
    with pytest.raises(ValueError):
        PricingMethod.parse("greedy")


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 4))
def test_mixture_pricing_matches_direct_sum(seed, k):
    rng = np.random.default_rng(seed)
    fam = ["linear", "semilog", "loglog"][seed % 3]
    n = 2
    inst = Instance(fam, [np.arange(1.0, 5.0)] * n, random_params(rng, fam, n))
    w = rng.dirichlet(np.ones(k))
    scen = [(w[j], random_params(rng, fam, n)) for j in range(k)]
    p, value, _ = mixture_price_opt(inst, scen)
    best = max(sum(wj * revenue(inst, inst.price_vector(lv), u) for wj, u in scen)
               for lv in itertools.product(range(4), repeat=n))
    assert value == pytest.approx(best, rel=1e-10)


def _slsqp_worst_case(inst, prices, uset):
    """Independent route: minimize R over the ball in split coordinates with SLSQP."""
    c = uset.center
    free = np.flatnonzero(uset.free_mask)
    nf = free.size

    def to_u(z):
        u = c.copy()
        u[free] = c[free] * (1 + z[:nf] - z[nf:])
        return ParamVector.from_flat(u, inst.n_products)

    if inst.family.value == "linear":
        # revenue is affine in u here, so the minimum is an exact LP in the split deviations
        base = revenue(inst, prices, to_u(np.zeros(2 * nf)))
        slope = np.array([revenue(inst, prices, to_u(np.eye(2 * nf)[k])) - base for k in range(2 * nf)])
        res = linprog(slope, A_ub=np.ones((1, 2 * nf)), b_ub=[uset.theta], bounds=[(0, None)] * (2 * nf),
                      method="highs")
        return revenue(inst, prices, to_u(res.x))

    # log R is a log-sum-exp of affine functions for the exponential families: convex and well scaled
    def f(z):
        return np.log(revenue(inst, prices, to_u(z)))

    cons = [{"type": "ineq", "fun": lambda z: uset.theta - z.sum()}]
    # SLSQP can stall on a face, so restart from the centre and from every vertex of the ball
    starts = [np.full(2 * nf, uset.theta / (4 * nf))] + list(uset.theta * np.eye(2 * nf))
    best = np.inf
    for z0 in starts:
        res = minimize(f, z0, bounds=[(0, uset.theta)] * (2 * nf), constraints=cons, method="SLSQP",
                       options={"ftol": 1e-15, "maxiter": 1000})
        z = np.clip(res.x, 0.0, uset.theta)
        if z.sum() > uset.theta:
            z *= uset.theta / z.sum()
        # a feasible point, so its value bounds the true minimum from above
        best = min(best, revenue(inst, prices, to_u(z)))
    return best


@settings(max_examples=25, deadline=None)
@given(family=st.sampled_from(["semilog", "loglog", "linear"]), seed=st.integers(0, 2**32 - 1),
       theta=st.sampled_from([0.1, 0.5, 1.0]))
def test_point_mass_closed_form_matches_numerical_minimum(family, seed, theta):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 3))
    ranges = {"linear": ((200, 300), (5, 15), (-0.1, 0.1)), "semilog": ((4, 7), (1, 1.5), (-0.4, 0.4)),
              "loglog": ((10, 14), (1, 2), (-0.6, 0.6))}[family]
    u0 = random_params(rng, family, n, ranges)
    inst = Instance(family, [np.arange(1.0, 6.0)] * n, u0)
    uset = L1Set(theta, u0)
    prices = rng.integers(1, 6, n).astype(float)
    values, args = point_mass_worst_case_l1(inst, prices[None, :], uset, return_argmin=True)
    assert revenue(inst, prices, args[0]) == pytest.approx(values[0], rel=1e-10)
    ref = _slsqp_worst_case(inst, prices, uset)
    assert values[0] <= ref + 1e-7 * max(1, abs(ref))
    assert values[0] == pytest.approx(ref, rel=1e-6, abs=1e-6)
    # the cutting-plane route agrees as well
    policy = RandomizedPolicy.point_mass(inst.price_vector(tuple(int(x) - 1 for x in prices)))
    try:
        _, kelley, _ = worst_case_convex(inst, policy, uset, tol=1e-10)
    except IterationLimit as exc:
        _, kelley, _ = exc.result
    assert kelley == pytest.approx(values[0], rel=1e-8, abs=1e-8)


def test_worst_case_discrete_is_the_minimum_member():
    rng = np.random.default_rng(11)
    u0 = random_params(rng, "semilog", 2)
    inst = Instance("semilog", [np.arange(1.0, 4.0)] * 2, u0)
    uset = DiscreteBudgetSet.from_multipliers(2, u0, (1.3, 1.3, 1.3), (0.7, 0.7, 0.7))
    policy = RandomizedPolicy.from_levels(inst, [(0, 1), (2, 2)], [0.4, 0.6])
    u, value, certified = worst_case_discrete(inst, policy, uset)
    values = [policy_value(inst, policy, m) for m in enumerate_discrete(uset)]
    assert certified
    assert value == pytest.approx(min(values), rel=1e-13)
    assert policy_value(inst, policy, u) == pytest.approx(value, rel=1e-13)
    _, local_value, local_cert = worst_case_discrete(inst, policy, uset, ScenarioMethod.local(3, seed=2))
    assert not local_cert
    assert local_value >= value - 1e-12


def test_explicit_members_may_use_their_own_family():
    u_lin = ParamVector([10.0], [2.0], [[0]])
    u_log = ParamVector([np.log(10.0)], [2.0], [[0]])
    inst = Instance("linear", [[1.0, 2.5]], u_lin)
    uset = ExplicitSet((u_lin, u_log), ("linear", "loglog"))
    policy = RandomizedPolicy.point_mass(inst.price_vector((1,)))
    u, value, _ = worst_case_discrete(inst, policy, uset)
    # 2.5 * (10 - 5) = 12.5 under the linear member, 10 / 2.5 = 4 under the log-log member
    assert value == pytest.approx(4.0)
    assert u == u_log
