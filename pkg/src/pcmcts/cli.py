"""``bench`` command line: run experiment plans and turn records into tables.

Exit codes: 0 success, 1 invalid plan or arguments, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from pcmcts.harness import (ExperimentPlan, PlanError, aggregate, plot_data, read_aggregate, read_csv,
                            run_plan, write_aggregate, write_records)

EXIT_OK, EXIT_PLAN, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("pcmcts.cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a plan file or a single combination")
    run.add_argument("--plan", type=Path, help="JSON plan file")
    run.add_argument("--scenario")
    run.add_argument("--strategy")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--iterations", type=int)
    run.add_argument("--reps", type=int, default=50)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--budget-mode", choices=("full", "divided"), default="full")
    run.add_argument("--jobs", type=int, default=1, help="episodes run in parallel processes")
    run.add_argument("--out", type=Path, help="records file (.csv, or JSON lines otherwise)")

    agg = sub.add_parser("aggregate", help="success-rate table from a records CSV")
    agg.add_argument("--in", dest="inp", type=Path, required=True)
    agg.add_argument("--out", type=Path, required=True)
    agg.add_argument("--no-pool", action="store_true", help="skip the pooled scoring-set rows")

    plot = sub.add_parser("plot-data", help="per-figure tables from an aggregate CSV")
    plot.add_argument("--in", dest="inp", type=Path, required=True)
    plot.add_argument("--out", type=Path, required=True)
    return parser


def plan_from_args(args) -> ExperimentPlan:
    if args.plan is not None:
        single = [f for f in ("scenario", "strategy", "iterations") if getattr(args, f) is not None]
        if single:
            raise PlanError(f"--plan cannot be combined with --{', --'.join(single)}")
        plan = ExperimentPlan.load(args.plan)
        if args.out is not None:
            plan = replace(plan, output=str(args.out))
        return plan
    missing = [f for f in ("scenario", "strategy", "iterations") if getattr(args, f) is None]
    if missing:
        raise PlanError(f"give --plan or all of --scenario --strategy --iterations (missing {missing})")
    return ExperimentPlan(scenarios=(args.scenario,), strategies=(args.strategy,),
                          iteration_budgets=(args.iterations,), worker_counts=(args.workers,),
                          repetitions=args.reps, base_seed=args.seed,
                          output=None if args.out is None else str(args.out), budget_mode=args.budget_mode)


def _progress(done, total):
    if done == total or done % 10 == 0:
        log.info("%d/%d episodes", done, total)


def cmd_run(args) -> int:
    try:
        plan = plan_from_args(args)
    except PlanError as exc:
        print(f"invalid plan: {exc}", file=sys.stderr)
        return EXIT_PLAN
    records = run_plan(plan, jobs=args.jobs, progress=_progress)
    if plan.output:
        write_records(records, plan.output)
        log.info("wrote %d records to %s", len(records), plan.output)
    else:
        rows = aggregate(records, pool_scoring=False)
        for row in rows:
            print(f"{row.scenario:16s} {row.strategy:10s} w={row.workers:<3d} budget={row.budget:<5d} "
                  f"success {row.successes}/{row.n} = {row.mean:.3f} +/- {2 * row.sigma:.3f}")
    failed = [r for r in records if r.error]
    if failed:
        print(f"{len(failed)} episode(s) raised errors; first: {failed[0].error}", file=sys.stderr)
    return EXIT_OK


def cmd_aggregate(args) -> int:
    rows = aggregate(read_csv(args.inp), pool_scoring=not args.no_pool)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_aggregate(rows, args.out)
    return EXIT_OK


def cmd_plot_data(args) -> int:
    for path in plot_data(read_aggregate(args.inp), args.out):
        print(path)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "aggregate": cmd_aggregate, "plot-data": cmd_plot_data}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; those count as an invalid plan here
        return EXIT_OK if exc.code == 0 else EXIT_PLAN
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - reported through the exit code
        print(f"bench {args.command} failed: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
