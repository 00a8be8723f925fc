import numpy as np
import pytest

from rrpo import (
    DiscreteBudgetSet,
    ExplicitSet,
    L1Set,
    ParamVector,
    RandomizedPolicy,
    evaluate_policy,
    load_orange_juice,
    read_instance,
    read_policy,
    write_instance,
    write_policy,
)
from rrpo.errors import ParseError, SchemaVersionMismatch, SupportMismatch
from rrpo.files import read_report, write_report
from rrpo.generate import BUDGET_HI, BUDGET_LO, GenerationSpec, generate_instance


def _instance():
    return generate_instance(GenerationSpec.preset("semilog", 3, 11, "convex"))


@pytest.mark.parametrize("kind", ["l1", "budget", "explicit"])
def test_instance_round_trip_is_bit_exact(tmp_path, kind):
    inst = _instance()
    uset = {"l1": L1Set(0.3, inst.u0),
            "budget": DiscreteBudgetSet.from_multipliers(2, inst.u0, BUDGET_HI, BUDGET_LO),
            "explicit": ExplicitSet((inst.u0, ParamVector.from_flat(inst.u0.flatten() * 1.1, 3)), ("semilog", "loglog"))}[kind]
    path = tmp_path / "inst.json"
    write_instance(path, inst, uset)
    back, uback = read_instance(path)
    assert back.family is inst.family
    assert back.u0 == inst.u0
    assert all(np.array_equal(a, b) for a, b in zip(back.grids, inst.grids))
    assert type(uback) is type(uset)
    if kind == "l1":
        assert uback.theta == 0.3
    elif kind == "budget":
        assert uback.gamma_budget == 2 and uback.u_hi == uset.u_hi and uback.u_lo == uset.u_lo
    else:
        assert uback.members == uset.members and uback.families == uset.families


def test_parse_errors_name_field_and_line(tmp_path):
    inst = _instance()
    path = tmp_path / "inst.json"
    write_instance(path, inst)
    text = path.read_text()
    bad = tmp_path / "bad.json"
    bad.write_text(text.replace('"beta"', '"bet"'))
    with pytest.raises(ParseError) as info:
        read_instance(bad)
    assert info.value.field == "beta"
    bad.write_text(text.replace('"family": "semilog"', '"family": "cubic"'))
    with pytest.raises(ParseError) as info:
        read_instance(bad)
    assert info.value.field == "family" and info.value.line == 3
    bad.write_text(text.replace("],", "]", 1))
    with pytest.raises(ParseError) as info:
        read_instance(bad)
    assert info.value.line == 5
    bad.write_text(text.replace('"schema_version": 1', '"schema_version": 2'))
    with pytest.raises(SchemaVersionMismatch) as info:
        read_instance(bad)
    assert info.value.line == 2
    with pytest.raises(ParseError):
        read_instance(tmp_path / "missing.json")


def test_policy_round_trip_and_renormalization(tmp_path):
    inst = _instance()
    policy = RandomizedPolicy.from_levels(inst, [(0, 1, 2), (4, 4, 0)], [0.25, 0.75])
    path = tmp_path / "policy.json"
    write_policy(path, policy, inst)
    back, renormalized = read_policy(path, inst)
    assert not renormalized
    assert back.support == policy.support
    path.write_text(path.read_text().replace("0.75", "0.76"))
    back, renormalized = read_policy(path, inst)
    assert renormalized
    assert back.probs.sum() == pytest.approx(1.0, abs=1e-15)
    assert back.probs[0] == pytest.approx(0.25 / 1.01)


def test_policy_off_grid_is_rejected(tmp_path):
    inst = _instance()
    path = tmp_path / "policy.json"
    write_policy(path, RandomizedPolicy.from_levels(inst, [(0, 0, 0)], [1.0]), inst)
    path.write_text(path.read_text().replace('"prices": [1.0', '"prices": [1.5'))
    with pytest.raises(SupportMismatch):
        read_policy(path, inst)


def test_report_round_trip(tmp_path):
    inst = _instance()
    uset = L1Set(0.3, inst.u0)
    policy = RandomizedPolicy.from_levels(inst, [(0, 1, 2)], [1.0])
    path = tmp_path / "report.json"
    write_report(path, inst, uset, {"method": "convex"}, [], policy, 1.5, {"lb": [1.0]})
    rep = read_report(path)
    assert rep["config"] == {"method": "convex"}
    assert rep["policy_worst_case"] == 1.5
    assert rep["uncertainty"] == {"type": "l1", "theta": 0.3}


def test_orange_juice_data():
    oj = load_orange_juice("loglog")
    assert oj.n_products == 11
    assert oj.grids[0].tolist() == [1.29, 2.49, 2.99, 3.19, 3.87]
    assert oj.u0.beta[10] == 0.1542
    assert oj.u0.gamma[9, 1] == -1.7987
    assert np.all(np.diag(oj.u0.gamma) == 0)
    semi = load_orange_juice("semilog")
    assert semi.u0.alpha[:3].tolist() == [9.873, 9.829, 8.598]
    with pytest.raises(ValueError):
        load_orange_juice("linear")


def test_evaluate_policy_accepts_a_path(tmp_path, two_revenue_example):
    inst, uset = two_revenue_example
    policy = RandomizedPolicy.from_levels(inst, [(0,), (1,)], [2 / 3, 1 / 3])
    path = tmp_path / "policy.json"
    write_policy(path, policy, inst)
    value, u, nominal = evaluate_policy(inst, uset, path)
    assert value == pytest.approx(50 / 3)
    assert nominal == pytest.approx(2 / 3 * 25)
