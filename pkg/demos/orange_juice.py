"""Randomized vs deterministic robust pricing on the eleven-product orange-juice data.

    python3 demos/orange_juice.py [--theta 0.5 1.0]

Deterministic robust pricing enumerates all 5^11 price vectors, which takes a
few minutes on one core.
"""

import argparse
import time

from rrpo import L1Set, PricingMethod, load_orange_juice, solve_drpo_convex, solve_rrpo_convex


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--theta", type=float, nargs="+", default=[0.5, 1.0])
    args = parser.parse_args()
    inst = load_orange_juice("loglog")
    for theta in args.theta:
        uset = L1Set(theta, inst.u0)
        t0 = time.perf_counter()
        rr = solve_rrpo_convex(inst, uset, pricing=PricingMethod.extreme())
        t1 = time.perf_counter()
        dr = solve_drpo_convex(inst, uset, PricingMethod.enumerate(cap=10**8))
        t2 = time.perf_counter()
        ri = 100 * (rr.z_rr - dr.z_dr) / dr.z_dr
        print(f"theta {theta}: Z_RR {rr.z_rr:.2f} ({t1 - t0:.1f}s), Z_DR {dr.z_dr:.2f} ({t2 - t1:.1f}s), RI {ri:.2f}%")
        for p, w in rr.policy.support:
            print(f"    {w:.4f}  {p.values}")


if __name__ == "__main__":
    main()
