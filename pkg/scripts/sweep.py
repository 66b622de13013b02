"""Run several plan files, pool their records and write raw + aggregate CSVs.

    python scripts/sweep.py scripts/plans/merge_single.json scripts/plans/merge_vote.json --out results/merge

The single-tree baseline needs its own plan (worker_counts [1]), so a
comparison sweep is usually two or more plans written into one directory.
"""
import argparse
import sys
import time
from pathlib import Path

from pcmcts.harness import ExperimentPlan, aggregate, plot_data, run_plan, write_aggregate, write_csv


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("plans", nargs="+", type=Path)
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args(argv)

    records = []
    for path in args.plans:
        plan = ExperimentPlan.load(path)
        start = time.perf_counter()
        records.extend(run_plan(plan, jobs=args.jobs))
        print(f"{path}: {plan.record_count} records in {time.perf_counter() - start:.1f} s", file=sys.stderr)

    args.out.mkdir(parents=True, exist_ok=True)
    write_csv(records, args.out / "records.csv")
    rows = aggregate(records)
    write_aggregate(rows, args.out / "aggregate.csv")
    plot_data(rows, args.out / "plot")
    for row in sorted(rows, key=lambda r: r.key):
        print(f"{row.scenario:16s} {row.strategy:11s} w={row.workers:<2d} b={row.budget:<5d} "
              f"{row.successes:3d}/{row.n} ({row.mean:.2f} +/- {2 * row.sem:.2f})")


if __name__ == "__main__":
    main()
