#!/usr/bin/env python3
"""Run the Monte Carlo benchmark and print per-quantile MSE reductions.

Thin wrapper over dtekit.simulation.run_study for quick desk experiments;
the dtekit CLI's `simulate` mode is the reproducible, manifest-backed path.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from dtekit.io import emit_report
from dtekit.learners import LEARNER_KINDS, LearnerKind
from dtekit.nn import TrainConfig
from dtekit.simulation import DgpConfig, run_study


def build_methods(names, hidden, train):
    methods = {}
    for name in names:
        if name == "empirical":
            methods[name] = None
        else:
            methods[name] = LearnerKind(name, hidden=hidden, train=train)
    return methods


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=50, help="Monte Carlo replications")
    parser.add_argument("--n", type=int, default=1000, help="units per replication")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--folds", type=int, default=2)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--hidden", default="128,64", help="comma list of trunk widths")
    parser.add_argument(
        "--methods",
        default="empirical,linear,nn-multi,nn-multi-monotone",
        help=f"comma list from: empirical,{','.join(LEARNER_KINDS)}",
    )
    parser.add_argument("--n-oracle", type=int, default=1_000_000, dest="n_oracle")
    parser.add_argument("--cache-dir", default=".oracle-cache", dest="cache_dir")
    parser.add_argument("--out", default="", help="optional CSV path for the full report")
    args = parser.parse_args()

    train = TrainConfig(epochs=args.epochs, seed=args.seed)
    hidden = tuple(int(h) for h in args.hidden.split(","))
    methods = build_methods(args.methods.split(","), hidden, train)

    t0 = time.time()
    report = run_study(
        DgpConfig(n_units=args.n, seed=args.seed),
        methods,
        n_reps=args.reps,
        n_folds=args.folds,
        n_oracle=args.n_oracle,
        cache_dir=args.cache_dir,
    )
    elapsed = time.time() - t0

    names = [n for n in report.methods if n != "empirical"]
    print(f"S={report.n_reps} n={report.n_units} L={report.n_folds} seed={report.seed} [{elapsed:.0f}s]")
    header = "quantile " + " ".join(f"{n:>20}" for n in names)
    print(header)
    for j, p in enumerate(report.probs):
        cells = " ".join(f"{report.reduction_pct[n][j]:>19.1f}%" for n in names)
        print(f"    {p:.2f} {cells}")
    medians = " ".join(f"{np.median(report.reduction_pct[n]):>19.1f}%" for n in names)
    print(f"  median {medians}")

    if args.out:
        path = emit_report(report, Path(args.out))
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
