import csv
import io
import math

import pytest

from rrpo.batch import COLUMNS, EXTRA_COLUMNS, BatchConfig, run_batch


def test_discrete_batch_rows_and_means(tmp_path):
    config = BatchConfig("linear", [1, 2], [1, 2], [0, 1], method="discrete")
    rows, text = run_batch(config, tmp_path / "out.csv")
    assert (tmp_path / "out.csv").read_text() == text
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert tuple(parsed[0].keys()) == COLUMNS + EXTRA_COLUMNS
    # 2 sizes x 2 seeds x 2 budgets, then one mean row per (size, budget)
    assert len(rows) == 8 + 4
    cells = [(r["I"], r["seed"], r["budget"]) for r in rows[:8]]
    assert cells == [(n, s, b) for n in (1, 2) for s in (0, 1) for b in (1, 2)]
    for r in rows[:8]:
        assert r["status"] == "ok"
        assert r["z_n"] >= r["z_rr"] - 1e-9 * abs(r["z_rr"])
        assert r["z_rr"] >= r["z_dr"] - 1e-6 * abs(r["z_dr"])
        assert r["z_dr"] >= r["z_n_wc"] - 1e-9 * abs(r["z_dr"])
    mean = rows[8]
    assert mean["seed"] == "mean" and mean["I"] == 1 and mean["budget"] == 1
    group = [r for r in rows[:8] if r["I"] == 1 and r["budget"] == 1]
    assert mean["z_rr"] == pytest.approx(sum(r["z_rr"] for r in group) / 2)


def test_worker_pool_keeps_configuration_order():
    serial = BatchConfig("semilog", [2], [0.1, 0.5], [0, 1, 2])
    parallel = BatchConfig("semilog", [2], [0.1, 0.5], [0, 1, 2], workers=2)
    a, _ = run_batch(serial)
    b, _ = run_batch(parallel)
    assert [(r["seed"], r["budget"]) for r in a] == [(r["seed"], r["budget"]) for r in b]
    assert [r["z_dr"] for r in a] == [r["z_dr"] for r in b]


def test_failures_are_recorded_per_row():
    config = BatchConfig("linear", [1], [1], [0], method="discrete", pricing="extreme")
    rows, _ = run_batch(config)
    assert rows[0]["status"].startswith("MethodFamilyMismatch")
    assert math.isnan(rows[0]["z_rr"])
    assert rows[1]["status"] == "mean of 0"


def test_config_validation():
    with pytest.raises(ValueError):
        BatchConfig("linear", [1], [1], [0], method="milp")
    with pytest.raises(ValueError):
        BatchConfig("linear", [1], [1], [0], pricing="greedy")
