import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrpo import Instance, ParamVector, demand, revenue, revenue_gradient_u
from rrpo.demand import coordinate_names, param_dim
from rrpo.errors import DimensionMismatch, NonpositivePrice


def test_flat_order_alpha_beta_then_gamma_row_major():
    u = ParamVector([1, 2], [3, 4], [[0, 5], [6, 0]])
    assert u.flatten().tolist() == [1, 2, 3, 4, 5, 6]
    assert coordinate_names(2) == ("alpha[0]", "alpha[1]", "beta[0]", "beta[1]", "gamma[0,1]", "gamma[1,0]")
    assert ParamVector.from_flat(u.flatten(), 2) == u
    assert param_dim(3) == 3 + 3 + 6


def test_nonzero_gamma_diagonal_rejected():
    with pytest.raises(ValueError):
        ParamVector([1, 2], [1, 1], [[0.5, 0], [0, 0]])


def test_demand_formulas():
    u = ParamVector([10, 8], [2, 1.5], [[0, 0.3], [0.2, 0]])
    p = np.array([1.5, 2.0])
    lin = Instance("linear", [[1.5], [2.0]], u)
    semi = Instance("semilog", [[1.5], [2.0]], u)
    loglog = Instance("loglog", [[1.5], [2.0]], u)
    assert np.allclose(demand(lin, p, u), [10 - 3 + 0.6, 8 - 3 + 0.3])
    assert np.allclose(demand(semi, p, u), np.exp([10 - 3 + 0.6, 8 - 3 + 0.3]))
    lp = np.log(p)
    assert np.allclose(demand(loglog, p, u), np.exp([10 - 2 * lp[0] + 0.3 * lp[1], 8 - 1.5 * lp[1] + 0.2 * lp[0]]))
    assert revenue(lin, p, u) == pytest.approx(1.5 * 7.6 + 2.0 * 5.3)


def test_linear_demand_is_not_clamped():
    u = ParamVector([1], [2], [[0]])
    inst = Instance("linear", [[3.0]], u)
    assert demand(inst, [3.0], u)[0] == pytest.approx(-5.0)


def test_instance_validation():
    u = ParamVector([1, 1], [1, 1], [[0, 0], [0, 0]])
    with pytest.raises(NonpositivePrice):
        Instance("linear", [[0.0, 1.0], [1.0]], u)
    with pytest.raises(DimensionMismatch):
        Instance("linear", [[1.0]], u)
    with pytest.raises(ValueError):
        Instance("linear", [[2.0, 1.0], [1.0]], u)
    with pytest.raises(ValueError):
        Instance("cubic", [[1.0], [1.0]], u)


def test_levels_round_trip():
    u = ParamVector([1, 1], [1, 1], [[0, 0], [0, 0]])
    inst = Instance("linear", [[1.0, 2.0, 3.0], [0.5, 4.0]], u)
    p = inst.price_vector((2, 1))
    assert p.values == (3.0, 4.0)
    assert inst.levels_of(p.values) == (2, 1)
    assert inst.n_price_vectors == 6
    assert inst.extreme_levels().tolist() == [[0, 0], [0, 1], [2, 0], [2, 1]]
    with pytest.raises(ValueError):
        inst.levels_of([2.5, 4.0])


def _central_difference(inst, p, u, h):
    flat = u.flatten()
    out = np.zeros_like(flat)
    for k in range(flat.size):
        e = np.zeros_like(flat)
        e[k] = h * max(1.0, abs(flat[k]))
        hi = revenue(inst, p, ParamVector.from_flat(flat + e, u.n_products))
        lo = revenue(inst, p, ParamVector.from_flat(flat - e, u.n_products))
        out[k] = (hi - lo) / (2 * e[k])
    return out


@settings(max_examples=60, deadline=None)
@given(family=st.sampled_from(["linear", "semilog", "loglog"]), n=st.integers(1, 3),
       seed=st.integers(0, 2**32 - 1))
def test_gradient_matches_finite_differences(family, n, seed):
    rng = np.random.default_rng(seed)
    g = rng.uniform(-0.3, 0.3, (n, n))
    np.fill_diagonal(g, 0)
    u = ParamVector(rng.uniform(0.5, 2, n), rng.uniform(0.2, 1.0, n), g)
    p = rng.uniform(0.5, 3.0, n)
    inst = Instance(family, [[x] for x in p], u)
    grad = revenue_gradient_u(inst, p, u)
    fd = _central_difference(inst, p, u, 1e-6)
    scale = max(1.0, np.abs(grad).max())
    assert np.allclose(grad, fd, rtol=1e-6, atol=1e-6 * scale)


@settings(max_examples=50, deadline=None)
@given(family=st.sampled_from(["semilog", "loglog"]), seed=st.integers(0, 2**32 - 1))
def test_exponential_families_have_positive_demand(family, seed):
    rng = np.random.default_rng(seed)
    u = ParamVector(rng.uniform(-5, 5, 2), rng.uniform(-2, 2, 2), [[0, rng.uniform(-1, 1)], [rng.uniform(-1, 1), 0]])
    p = rng.uniform(0.1, 10, 2)
    inst = Instance(family, [[p[0]], [p[1]]], u)
    assert np.all(demand(inst, p, u) > 0)
