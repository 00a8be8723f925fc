import json

import pytest

from rrpo import read_instance
from rrpo.cli import main


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "inst.json"
    assert main(["generate", "--family", "semilog", "--I", "2", "--seed", "3", "--uncertainty", "l1",
                 "--theta", "0.5", "--out", str(path)]) == 0
    return path


def test_generate_solve_evaluate(tmp_path, instance_file, capsys):
    report, policy = tmp_path / "report.json", tmp_path / "policy.json"
    assert main(["solve", "--instance", str(instance_file), "--out", str(report),
                 "--policy-out", str(policy)]) == 0
    out = json.loads(capsys.readouterr().out)
    m = out["metrics"]
    assert m["z_n"] >= m["z_rr"] >= m["z_dr"] * (1 - 1e-9) >= m["z_n_wc"] * (1 - 1e-9)
    assert main(["evaluate", "--instance", str(instance_file), "--policy", str(policy)]) == 0
    ev = json.loads(capsys.readouterr().out)
    assert ev["worst_case"] == pytest.approx(m["z_rr"], rel=1e-5)
    assert json.loads(report.read_text())["config"]["method"] == "convex"


def test_check_proofness_on_finite_set(tmp_path, capsys):
    path = tmp_path / "inst.json"
    assert main(["generate", "--family", "linear", "--I", "1", "--preset", "discrete", "--uncertainty", "budget",
                 "--gamma", "1", "--out", str(path)]) == 0
    capsys.readouterr()
    assert main(["check-proofness", "--instance", str(path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) == {"conditions", "unique_worst_case_test", "minimax_gap"}
    assert out["minimax_gap"]["gap"] >= -1e-9


def test_orange_juice_export(tmp_path):
    path = tmp_path / "oj.json"
    assert main(["generate", "--orange-juice", "loglog", "--out", str(path)]) == 0
    inst, uset = read_instance(path)
    assert inst.n_products == 11 and uset is None


def test_batch_to_stdout(capsys):
    assert main(["batch", "--family", "linear", "--I", "1", "--budgets", "1", "--seeds", "0-1",
                 "--method", "discrete"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("I,budget,t_rr")
    assert len(lines) == 1 + 2 + 1


def test_exit_codes(tmp_path, instance_file):
    assert main(["solve", "--instance", str(tmp_path / "nope.json")]) == 2
    assert main(["solve", "--instance", str(instance_file), "--method", "discrete"]) == 2
    assert main(["solve", "--instance", str(instance_file), "--cap", "3"]) == 3
    assert main(["generate", "--out", str(tmp_path / "x.json")]) == 2
    with pytest.raises(SystemExit) as info:
        main(["solve"])
    assert info.value.code == 2
