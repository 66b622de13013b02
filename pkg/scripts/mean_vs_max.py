"""Leaf-parallel mean vs max aggregation on narrow-5pct, per worker count.

Prints the success gap (max minus mean) so the effect of pessimistic
averaging can be read off directly.
"""
import argparse

from pcmcts.harness import ExperimentPlan, run_plan
from pcmcts.stats import significantly_greater, summarize


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--budget", type=int, default=400)
    parser.add_argument("--workers", type=int, nargs="+", default=[2, 4, 8])
    parser.add_argument("--reps", type=int, default=50)
    parser.add_argument("--seed", type=int, default=4)
    args = parser.parse_args(argv)

    plan = ExperimentPlan(scenarios=("narrow-5pct",), strategies=("leaf_mean", "leaf_max"),
                          iteration_budgets=(args.budget,), worker_counts=tuple(args.workers),
                          repetitions=args.reps, base_seed=args.seed)
    records = run_plan(plan)
    for workers in args.workers:
        mean = summarize([r.success for r in records if r.workers == workers and r.strategy == "leaf_mean"])
        top = summarize([r.success for r in records if r.workers == workers and r.strategy == "leaf_max"])
        print(f"workers={workers}: mean {mean.successes}/{mean.n}  max {top.successes}/{top.n}  "
              f"gap {top.mean - mean.mean:+.2f}  significant={significantly_greater(top, mean)}")


if __name__ == "__main__":
    main()
