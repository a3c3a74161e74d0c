#!/usr/bin/env python3
"""Measure how joint multi-output fits scale against per-location loops.

Prints one table per learner kind: joint wall time at M outputs next to the
M-fold single-output baseline and their ratio. Sub-linear scaling shows up
as ratios well below 1.
"""

import argparse

from dtekit.learners import LearnerKind, benchmark_training_cost
from dtekit.nn import TrainConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=1000, help="training rows")
    parser.add_argument("--d", type=int, default=20, help="covariate count")
    parser.add_argument("--sizes", default="1,5,10,19", help="comma list of output counts")
    parser.add_argument("--repeats", type=int, default=3, help="best-of repeats per timing")
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--kinds", default="linear,nn-multi,nn-multi-monotone")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    sizes = tuple(int(s) for s in args.sizes.split(","))
    train = TrainConfig(epochs=args.epochs, seed=args.seed)
    for name in args.kinds.split(","):
        kind = LearnerKind(name, train=train)
        rows = benchmark_training_cost(
            kind, args.n, args.d, sizes, repeats=args.repeats, seed=args.seed
        )
        print(f"{name} (n={args.n}, d={args.d}, repeats={args.repeats})")
        print("   M    joint      loop    ratio")
        for row in rows:
            print(
                f"  {row.n_outputs:>2} {row.fit_seconds:>8.3f}s {row.baseline_seconds:>8.3f}s"
                f" {row.ratio:>8.2f}"
            )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
