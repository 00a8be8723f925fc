"""Three hand-sized instances where the benefit of randomizing can be read off directly.

    python3 demos/small_examples.py
"""

import numpy as np

from rrpo import (
    ExplicitSet,
    Instance,
    ParamVector,
    RandomizedPolicy,
    check_corollary2,
    drpo_discrete,
    evaluate_policy,
    minimax_gap,
    solve_double_cg,
)


def single(alpha, beta):
    return ParamVector([alpha], [beta], [[0.0]])


def two_revenue():
    # R1 = p (10 - p), R2 = p (4 - 0.2 p), prices {5, 10}
    u1, u2 = single(10, 1), single(4, 0.2)
    inst, uset = Instance("linear", [np.array([5.0, 10.0])], u1), ExplicitSet((u1, u2))
    rep = solve_double_cg(inst, uset)
    dr = drpo_discrete(inst, uset)
    print("two revenue curves")
    print(f"  deterministic robust: price {dr.p_dr.values[0]}, worst case {dr.z_dr}")
    for p, w in rep.policy.support:
        print(f"  randomized: price {p.values[0]} with probability {w:.4f}")
    print(f"  randomized worst case {rep.ub:.6f}")
    print(f"  unique-worst-case test: {check_corollary2(inst, uset).verdict.value}")


def tie():
    u1 = single(10, 1)
    inst = Instance("linear", [np.array([5.0, 8.0, 9.0])], u1)
    uset = ExplicitSet((u1, single(3, 0.1), single(3.6, 0.2)))
    g = minimax_gap(inst, uset)
    print("tied worst case")
    print(f"  max-min {g.maxmin}, mixed min-max {g.minmax:.6f}, pure min-max {g.pure_minmax}")
    rep = check_corollary2(inst, uset)
    print(f"  unique-worst-case test: {rep.verdict.value} ({rep.get('n_minimizers')} minimizers at p = 8)")


def mixed_families():
    # linear 10 - 2p against log-log 10 p^-2 on a fine grid over [1, 4]
    grid = np.round(np.linspace(1.0, 4.0, 30001), 4)
    u_lin, u_log = single(10.0, 2.0), single(np.log(10.0), 2.0)
    inst = Instance("linear", [grid], u_lin)
    uset = ExplicitSet((u_lin, u_log), ("linear", "loglog"))
    policy = RandomizedPolicy.from_levels(inst, [inst.levels_of([1.0]), inst.levels_of([2.5])], [17 / 21, 4 / 21])
    value, _, _ = evaluate_policy(inst, uset, policy)
    dr = drpo_discrete(inst, uset)
    print("linear against log-log demand")
    print(f"  deterministic robust: price {dr.p_dr.values[0]}, worst case {dr.z_dr:.5f}")
    print(f"  mix of 1.0 and 2.5 (17/21, 4/21): worst case {value:.6f} = 62/7")


if __name__ == "__main__":
    two_revenue()
    tie()
    mixed_families()
