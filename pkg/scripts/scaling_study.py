#!/usr/bin/env python3
"""Wall-time scaling of the staged solver as instances grow.

Solves generated families of increasing width, prints a table and the
log-log slope of time against edge count.  A slope far above the proven
per-sweep polynomial degree would flag a fixpoint pathology.
"""

from __future__ import annotations

import argparse

from msplab.lab import bench_scaling


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--widths", default="2,3,4,5,7")
    parser.add_argument("--stages", type=int, default=6)
    parser.add_argument("--reps", type=int, default=3)
    parser.add_argument("--eset-density", type=float, default=0.5)
    args = parser.parse_args()

    rows, slope = bench_scaling(
        widths=tuple(int(w) for w in args.widths.split(",")),
        stages=args.stages,
        reps=args.reps,
        eset_density=args.eset_density,
    )
    print(f"{'width':>6} {'|V|':>6} {'|E|':>7} {'sweeps':>7} {'ms':>10}  answer")
    for row in rows:
        print(
            f"{row['width']:>6} {row['vertices']:>6} {row['edges']:>7} "
            f"{row['sweeps']:>7} {row['seconds'] * 1000:>10.2f}  {row['answer']}"
        )
    print(f"\nlog-log slope (time vs edges): {slope:.2f}")


if __name__ == "__main__":
    main()
