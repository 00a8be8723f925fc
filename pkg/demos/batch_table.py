"""Average benefit of randomizing over random semi-log and log-log instances.

    python3 demos/batch_table.py [--seeds 24] [--sizes 2 3 5]
"""

import argparse

from rrpo.batch import BatchConfig, run_batch


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seeds", type=int, default=24)
    parser.add_argument("--sizes", type=int, nargs="+", default=[2, 3, 5])
    args = parser.parse_args()
    print(f"{'family':8s} {'I':>2s} {'theta':>5s} {'Z_RR':>10s} {'Z_DR':>10s} {'RI %':>7s}")
    for family in ("semilog", "loglog"):
        rows, _ = run_batch(BatchConfig(family, args.sizes, [0.5, 1.0], list(range(args.seeds))))
        for r in rows:
            if r["seed"] == "mean":
                print(f"{family:8s} {r['I']:2d} {r['budget']:5.1f} {r['z_rr']:10.3f} {r['z_dr']:10.3f} "
                      f"{r['ri_percent']:7.2f}")


if __name__ == "__main__":
    main()
