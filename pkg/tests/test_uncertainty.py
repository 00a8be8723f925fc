import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from rrpo import DiscreteBudgetSet, ExplicitSet, L1Set, ParamVector, contains, enumerate_discrete
from rrpo.errors import CapExceeded, DimensionMismatch, EmptyInput
from rrpo.uncertainty import l1_as_linear_constraints, linear_min_over_l1


def _u0():
    return ParamVector([10, 8], [2, 1.5], [[0, 0.3], [-0.2, 0]])


def test_l1_membership_is_relative():
    u0 = _u0()
    s = L1Set(0.5, u0)
    assert contains(s, u0)
    moved = ParamVector([10 * 1.3, 8], [2, 1.5 * 0.8], [[0, 0.3], [-0.2, 0]])
    assert contains(s, moved)  # 0.3 + 0.2
    moved = ParamVector([10 * 1.3, 8], [2, 1.5 * 0.79], [[0, 0.3], [-0.2, 0]])
    assert not contains(s, moved)
    with pytest.raises(ValueError):
        L1Set(-0.1, u0)


def test_zero_nominal_coordinates_are_frozen():
    u0 = ParamVector([10, 8], [2, 1.5], [[0, 0.0], [-0.2, 0]])
    s = L1Set(1.0, u0)
    assert not contains(s, ParamVector([10, 8], [2, 1.5], [[0, 0.01], [-0.2, 0]]))
    assert s.free_mask.tolist() == [True, True, True, True, False, True]


def test_budget_set_cardinality_and_order():
    u0 = _u0()
    s = DiscreteBudgetSet.from_multipliers(2, u0, (1.3, 1.3, 1.3), (0.7, 0.7, 0.7))
    members = enumerate_discrete(s)
    d = u0.dim
    assert len(members) == s.cardinality == 1 + 2 * d + math.comb(d, 2) * 4
    assert members[0] == u0
    assert members[1].alpha[0] == pytest.approx(13.0)  # high before low
    assert members[2].alpha[0] == pytest.approx(7.0)
    assert len({m.key() for m in members}) == len(members)
    assert all(contains(s, m) for m in members)
    with pytest.raises(CapExceeded) as info:
        enumerate_discrete(s, cap=10)
    assert info.value.cardinality == s.cardinality


def test_explicit_set_validation():
    with pytest.raises(EmptyInput):
        ExplicitSet(())
    with pytest.raises(DimensionMismatch):
        ExplicitSet((_u0(), ParamVector([1], [1], [[0]])))
    with pytest.raises(DimensionMismatch):
        ExplicitSet((_u0(),), ("linear", "loglog"))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), theta=st.floats(0.0, 2.0))
def test_linear_min_over_ball_matches_lp(seed, theta):
    rng = np.random.default_rng(seed)
    u0 = ParamVector(rng.uniform(-3, 3, 2), rng.uniform(0.5, 2, 2), [[0, rng.uniform(-1, 1)], [0.0, 0]])
    s = L1Set(theta, u0)
    grad = rng.normal(size=u0.dim)
    u_star, value = linear_min_over_l1(s, grad)
    assert contains(s, u_star, tol=1e-9)
    assert value == pytest.approx(grad @ (u_star.flatten() - u0.flatten()), abs=1e-12)
    block = l1_as_linear_constraints(s)
    d = u0.dim
    c = np.concatenate([grad, np.zeros(d)])
    rel = np.array([r.value for r in block.relations])
    sign = np.where(rel == ">=", -1.0, 1.0)
    ineq = rel != "=="
    eq = ~ineq
    ref = linprog(c, A_ub=(block.matrix * sign[:, None])[ineq], b_ub=(block.rhs * sign)[ineq],
                  A_eq=block.matrix[eq] if eq.any() else None, b_eq=block.rhs[eq] if eq.any() else None,
                  bounds=[(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi)
                          for lo, hi in zip(block.lower, block.upper)], method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    assert ref.status == 0
    assert value == pytest.approx(ref.fun - grad @ u0.flatten(), abs=1e-8 * max(1, abs(ref.fun)))
