import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from conftest import random_params
from rrpo import (
    DiscreteBudgetSet,
    ExplicitSet,
    GenerationSpec,
    Instance,
    PricingMethod,
    drpo_discrete,
    full_matrix_lp_oracle,
    generate_instance,
    solve_double_cg,
    solve_matrix_game,
)
from rrpo.discrete import payoff_matrix, solve_matrix_game_dual
from rrpo.errors import IterationLimit


def _highs_game_value(table):
    n, m = table.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.hstack([-table.T, np.ones((m, 1))]), b_ub=np.zeros(m),
                  A_eq=np.hstack([np.ones((1, n)), [[0.0]]]), b_eq=[1.0],
                  bounds=[(0, None)] * n + [(None, None)], method="highs")
    return -res.fun


def test_matrix_game_known_value():
    # matching pennies shifted by 1: value 1, uniform strategies
    value, x, y = solve_matrix_game(np.array([[2.0, 0.0], [0.0, 2.0]]))
    assert value == pytest.approx(1.0)
    assert np.allclose(x, [0.5, 0.5])
    assert np.allclose(y, [0.5, 0.5])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 7), m=st.integers(1, 7))
def test_matrix_game_matches_highs(seed, n, m):
    table = np.random.default_rng(seed).uniform(-5, 10, (n, m))
    value, x, y = solve_matrix_game(table)
    assert value == pytest.approx(_highs_game_value(table), rel=1e-9, abs=1e-9)
    # both strategies certify the value
    assert (x @ table).min() >= value - 1e-9
    assert (table @ y).max() <= value + 1e-9
    assert solve_matrix_game_dual(table)[0] == pytest.approx(value, rel=1e-9, abs=1e-9)


def test_two_revenue_example_exact(two_revenue_example):
    inst, uset = two_revenue_example
    rep = solve_double_cg(inst, uset)
    assert rep.lb == pytest.approx(50 / 3, abs=1e-9)
    assert rep.ub == pytest.approx(50 / 3, abs=1e-9)
    assert [p.values for p, _ in rep.policy.support] == [(5.0,), (10.0,)]
    assert np.allclose(rep.policy.probs, [2 / 3, 1 / 3], atol=1e-9)
    dr = drpo_discrete(inst, uset)
    assert dr.z_dr == pytest.approx(15.0)
    assert dr.p_dr.values == (5.0,)
    value, _, _ = full_matrix_lp_oracle(inst, [inst.price_vector((0,)), inst.price_vector((1,))], list(uset.members))
    assert value == pytest.approx(50 / 3, abs=1e-12)


def test_tie_example_has_no_gain(tie_example):
    inst, uset = tie_example
    rep = solve_double_cg(inst, uset)
    assert rep.ub == pytest.approx(16.0, abs=1e-9)
    assert drpo_discrete(inst, uset).z_dr == pytest.approx(16.0)


def test_frozen_budget_instance():
    # values computed once with HiGHS on the full payoff table, then frozen
    spec = GenerationSpec.preset("semilog", 2, 1, "discrete")
    spec = GenerationSpec(spec.family, 2, 1, spec.alpha_range, spec.beta_range, spec.gamma_range,
                          ((1.0, 2.0, 3.0), (1.0, 2.0, 3.0)))
    inst = generate_instance(spec)
    uset = DiscreteBudgetSet.from_multipliers(2, inst.u0, (1.3, 1.3, 1.3), (0.7, 0.7, 0.7))
    rep = solve_double_cg(inst, uset)
    assert rep.ub == pytest.approx(303.80554950374017, rel=1e-9)
    assert rep.lb == pytest.approx(303.80554950374017, rel=1e-9)
    assert drpo_discrete(inst, uset).z_dr == pytest.approx(256.1690457889298, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(family=st.sampled_from(["linear", "semilog", "loglog"]), seed=st.integers(0, 2**32 - 1))
def test_double_cg_matches_full_table(family, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    grids = [np.sort(rng.choice(np.arange(1, 6), rng.integers(1, 4), replace=False)).astype(float) for _ in range(n)]
    uset = ExplicitSet(tuple(random_params(rng, family, n) for _ in range(int(rng.integers(1, 13)))))
    inst = Instance(family, grids, uset.members[0])
    rep = solve_double_cg(inst, uset)
    _, _, table = payoff_matrix(inst, uset)
    ref = _highs_game_value(table)
    assert rep.certified
    assert rep.ub == pytest.approx(ref, rel=1e-7)
    assert rep.lb <= rep.ub + 1e-9 * max(1, abs(rep.ub))
    assert drpo_discrete(inst, uset).z_dr <= rep.ub + 1e-7 * max(1, abs(rep.ub))


def test_double_cg_time_limit():
    rng = np.random.default_rng(0)
    u0 = random_params(rng, "semilog", 3)
    inst = Instance("semilog", [np.arange(1.0, 6.0)] * 3, u0)
    uset = DiscreteBudgetSet.from_multipliers(3, u0, (1.3, 1.3, 1.3), (0.7, 0.7, 0.7))
    with pytest.raises(IterationLimit) as info:
        solve_double_cg(inst, uset, time_limit=0.0)
    assert info.value.result is not None


def test_local_pricing_is_not_certified():
    rng = np.random.default_rng(4)
    u0 = random_params(rng, "linear", 2)
    inst = Instance("linear", [np.arange(1.0, 6.0)] * 2, u0)
    uset = DiscreteBudgetSet.from_multipliers(1, u0, (1.3, 1.3, 1.3), (0.7, 0.7, 0.7))
    rep = solve_double_cg(inst, uset, pricing=PricingMethod.local(2, seed=0))
    exact = solve_double_cg(inst, uset)
    assert not rep.certified
    assert rep.lb <= exact.ub + 1e-7 * abs(exact.ub)
