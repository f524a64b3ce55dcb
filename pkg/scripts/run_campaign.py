#!/usr/bin/env python3
"""Run a differential campaign from the command line.

Example:

    python scripts/run_campaign.py --instances 100000 --workers 2 --out runs/sweep-a

Equivalent to `msplab fuzz` with an inline config; kept as a script so sweeps
are easy to edit and rerun.
"""

from __future__ import annotations

import argparse

from msplab.lab import CampaignConfig, run_differential


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--stages-min", type=int, default=4)
    parser.add_argument("--stages-max", type=int, default=12)
    parser.add_argument("--width-max", type=int, default=6)
    parser.add_argument("--edge-density", type=float, default=0.5)
    parser.add_argument(
        "--eset-densities", default="0.3,0.5,0.8", help="comma-separated membership densities"
    )
    parser.add_argument("--oracle-max-nodes", type=int, default=10_000_000)
    parser.add_argument("--workers", type=int, default=2)
    parser.add_argument("--out", default=None, help="archive/report directory")
    parser.add_argument("--resume", action="store_true")
    args = parser.parse_args()

    config = CampaignConfig(
        instances=args.instances,
        seed=args.seed,
        stages_min=args.stages_min,
        stages_max=args.stages_max,
        width_max=args.width_max,
        edge_density=args.edge_density,
        eset_densities=tuple(float(v) for v in args.eset_densities.split(",")),
        oracle_max_nodes=args.oracle_max_nodes,
        workers=args.workers,
    )
    report = run_differential(config, out_dir=args.out, resume=args.resume)
    print(report.to_table(), end="")


if __name__ == "__main__":
    main()
