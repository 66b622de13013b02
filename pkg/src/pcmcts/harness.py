"""Closed-loop benchmark runner: strategy x workers x budget x scenario sweeps.

Every repetition is a full episode: plan from the current state, execute
the first joint action, replan, until the scenario ends. Seeds are derived
from ``(base_seed, combination index, repetition)`` so a plan reruns
bit-exactly, and records are always ordered by combination then
repetition.
"""
from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from pcmcts.envs.presets import PRESETS, get_preset
from pcmcts.parallel import Strategy, StrategyKind
from pcmcts.rng import SEED_MASK, StreamKey, derive_seed, derive_stream
from pcmcts.stats import summarize

log = logging.getLogger(__name__)

CSV_HEADER = ("scenario", "strategy", "workers", "budget", "rep", "seed", "success", "steps", "wall_ms")
DEFAULT_BUDGETS = (100, 200, 400, 1000, 2000, 4000)


class PlanError(ValueError):
    """The experiment plan is malformed or names something unknown."""


@dataclass(frozen=True)
class ExperimentPlan:
    scenarios: tuple[str, ...]
    strategies: tuple[str, ...]
    iteration_budgets: tuple[int, ...]
    worker_counts: tuple[int, ...]
    repetitions: int = 50
    base_seed: int = 0
    output: str | None = None
    budget_mode: str = "full"
    search_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("scenarios", "strategies", "iteration_budgets", "worker_counts"):
            value = getattr(self, name)
            if isinstance(value, (str, int)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
            if not getattr(self, name):
                raise PlanError(f"plan field {name!r} must be a nonempty list")
        if not isinstance(self.repetitions, int) or self.repetitions < 1:
            raise PlanError("repetitions must be a positive integer")
        if not isinstance(self.base_seed, int) or not 0 <= self.base_seed <= SEED_MASK:
            raise PlanError("base_seed must be a 64-bit unsigned integer")
        for budget in self.iteration_budgets:
            if not isinstance(budget, int) or budget < 1:
                raise PlanError(f"iteration budgets must be positive integers, got {budget!r}")
        for workers in self.worker_counts:
            if not isinstance(workers, int) or workers < 1:
                raise PlanError(f"worker counts must be positive integers, got {workers!r}")
        unknown = [s for s in self.scenarios if s not in PRESETS]
        if unknown:
            raise PlanError(f"unknown scenario preset(s) {unknown}; known: {sorted(PRESETS)}")
        for kind in self.strategies:
            try:
                kind = StrategyKind(kind)
            except ValueError:
                raise PlanError(f"unknown strategy {kind!r}; known: {[k.value for k in StrategyKind]}") from None
            if kind is StrategyKind.SINGLE and set(self.worker_counts) != {1}:
                raise PlanError("the single strategy only runs with worker_counts [1]; "
                                "put the baseline in its own plan")
        try:
            get_preset(self.scenarios[0]).config(**self.search_overrides)
        except (TypeError, ValueError) as exc:
            raise PlanError(f"invalid search_overrides: {exc}") from None

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentPlan:
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise PlanError(f"unknown plan field(s): {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise PlanError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> ExperimentPlan:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise PlanError(f"cannot read plan {path}: {exc}") from None
        if not isinstance(data, dict):
            raise PlanError("plan file must hold a JSON object")
        return cls.from_dict(data)

    def combinations(self):
        """``(index, scenario, strategy, budget, workers)`` in output order."""
        combos = itertools.product(self.scenarios, self.strategies, self.iteration_budgets, self.worker_counts)
        for index, (scenario, strategy, budget, workers) in enumerate(combos):
            yield index, scenario, strategy, budget, workers

    @property
    def record_count(self) -> int:
        return (len(self.scenarios) * len(self.strategies) * len(self.iteration_budgets)
                * len(self.worker_counts) * self.repetitions)


@dataclass(frozen=True)
class RunRecord:
    scenario: str
    strategy: str
    workers: int
    budget: int
    rep: int
    seed: int
    success: bool
    steps: int
    wall_ms: float
    # executed joint actions; kept in JSON output only
    trace: tuple = field(default=(), compare=False)
    error: str = field(default="", compare=False)

    def same_outcome(self, other: RunRecord) -> bool:
        keys = ("scenario", "strategy", "workers", "budget", "rep", "seed", "success", "steps")
        return all(getattr(self, k) == getattr(other, k) for k in keys) and self.trace == other.trace


def episode_seed(base_seed: int, combination: int, rep: int) -> int:
    return derive_seed(StreamKey(base_seed, (("combo", combination), ("rep", rep))))


def replan_seed(seed: int, depth: int) -> int:
    return derive_seed(StreamKey(seed, (("replan", depth),)))


def run_episode(scenario: str, strategy: Strategy, budget: int, seed: int, rep: int = 0,
                search_overrides: dict | None = None, executor=None) -> RunRecord:
    preset = get_preset(scenario)
    env = preset.env()
    state = env.initial_state()
    env_rng = derive_stream(StreamKey(seed, (("episode", 0),)))
    trace = []
    error = ""
    start = time.perf_counter()
    try:
        while not state.terminal:
            config = preset.config(**{**(search_overrides or {}), "iteration_budget": budget,
                                      "rng_seed": replan_seed(seed, state.depth)})
            joint = strategy.plan(env, state, config, executor)
            state, _, _ = env.step(state, joint, env_rng)
            trace.append(joint)
        success = env.is_success(state)
    except Exception as exc:
        log.warning("episode %s/%s/%d rep %d failed: %r", scenario, strategy.label, budget, rep, exc)
        success, error = False, repr(exc)
    wall_ms = (time.perf_counter() - start) * 1e3
    return RunRecord(scenario, strategy.label, strategy.worker_count, budget, rep, seed, bool(success),
                     state.depth, wall_ms, tuple(trace), error)


def _run_task(task):
    scenario, kind, workers, budget, rep, seed, budget_mode, overrides = task
    strategy = Strategy(kind, workers, budget_mode)
    return run_episode(scenario, strategy, budget, seed, rep, overrides)


def plan_tasks(plan: ExperimentPlan) -> list[tuple]:
    tasks = []
    for index, scenario, kind, budget, workers in plan.combinations():
        for rep in range(plan.repetitions):
            tasks.append((scenario, kind, workers, budget, rep, episode_seed(plan.base_seed, index, rep),
                          plan.budget_mode, plan.search_overrides))
    return tasks


def run_plan(plan: ExperimentPlan, jobs: int = 1, progress=None) -> list[RunRecord]:
    """Execute every combination and repetition; records come back in plan order."""
    tasks = plan_tasks(plan)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        records = []
        for task in tasks:
            records.append(_run_task(task))
            if progress is not None:
                progress(len(records), len(tasks))
    assert len(records) == plan.record_count
    return records


# -- record I/O -------------------------------------------------------------

def write_csv(records: Iterable[RunRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([r.scenario, r.strategy, r.workers, r.budget, r.rep, r.seed,
                             int(r.success), r.steps, repr(float(r.wall_ms))])


def read_csv(path: str | Path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}; expected {CSV_HEADER}")
        records = []
        for row in reader:
            scenario, strategy, workers, budget, rep, seed, success, steps, wall_ms = row
            records.append(RunRecord(scenario, strategy, int(workers), int(budget), int(rep), int(seed),
                                     success == "1", int(steps), float(wall_ms)))
    return records


def write_json(records: Iterable[RunRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(asdict(r)) + "\n")


def write_records(records: Sequence[RunRecord], path: str | Path) -> None:
    """CSV for ``.csv`` paths, JSON lines (with action traces) otherwise."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".csv":
        write_csv(records, path)
    else:
        write_json(records, path)


# -- aggregation ------------------------------------------------------------

POOLED_SCENARIO = "scoring-set"

AGGREGATE_HEADER = ("scenario", "strategy", "workers", "budget", "n", "successes", "mean", "sigma",
                    "band_lo", "band_hi", "sem", "sem_band_lo", "sem_band_hi")


@dataclass(frozen=True)
class AggregateRow:
    scenario: str
    strategy: str
    workers: int
    budget: int
    n: int
    successes: int
    mean: float
    sigma: float
    band_lo: float
    band_hi: float
    sem: float
    sem_band_lo: float
    sem_band_hi: float

    @property
    def key(self):
        return self.scenario, self.strategy, self.workers, self.budget


def _row(key, indicators) -> AggregateRow:
    s = summarize(indicators)
    return AggregateRow(*key, s.n, s.successes, s.mean, s.sigma, *s.band, s.sem, *s.sem_band)


def aggregate(records: Sequence[RunRecord], pool_scoring: bool = True) -> list[AggregateRow]:
    """Success-rate statistics per (scenario, strategy, workers, budget).

    ``sigma`` is the sample standard deviation of the per-repetition success
    indicators and ``band`` is mean +/- 2 sigma; ``sem`` is sigma / sqrt(n)
    with its own +/- 2 band. When two or more scoring presets are present a
    pooled ``scoring-set`` row is added for each strategy/workers/budget.
    """
    if not records:
        raise ValueError("no records to aggregate")
    groups: dict[tuple, list[bool]] = {}
    for r in records:
        groups.setdefault((r.scenario, r.strategy, r.workers, r.budget), []).append(r.success)
    rows = [_row(key, values) for key, values in groups.items()]

    scoring = sorted({r.scenario for r in records if r.scenario in PRESETS and PRESETS[r.scenario].scoring})
    if pool_scoring and len(scoring) >= 2:
        pooled: dict[tuple, list[bool]] = {}
        for r in records:
            if r.scenario in scoring:
                pooled.setdefault((POOLED_SCENARIO, r.strategy, r.workers, r.budget), []).append(r.success)
        rows.extend(_row(key, values) for key, values in pooled.items())
    return rows


def write_aggregate(rows: Iterable[AggregateRow], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_HEADER)
        for row in rows:
            writer.writerow([getattr(row, name) for name in AGGREGATE_HEADER])


def read_aggregate(path: str | Path) -> list[AggregateRow]:
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            rows.append(AggregateRow(
                raw["scenario"], raw["strategy"], int(raw["workers"]), int(raw["budget"]), int(raw["n"]),
                int(raw["successes"]), *(float(raw[k]) for k in AGGREGATE_HEADER[6:])))
    return rows


# -- plot-ready tables ------------------------------------------------------

def plot_data(rows: Sequence[AggregateRow], out_dir: str | Path) -> list[Path]:
    """Write tables mirroring the scalability, per-scenario and comparison figures.

    * ``scalability_<strategy>.csv``: success vs budget per worker count with
      the single-threaded baseline band (deviation of the mean, 2 sigma).
    * ``per_scenario_<strategy>.csv``: success per scenario, budget and workers.
    * ``comparison.csv``: every parallel strategy against the baseline.

    Budgets are meant for a logarithmic x-axis; ``log10_budget`` is included
    and ``meta.json`` records the axis scale.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    baseline = {(r.scenario, r.budget): r for r in rows if r.strategy == StrategyKind.SINGLE.value}
    written = []

    def emit(name, header, body):
        path = out / name
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(body)
        written.append(path)

    strategies = sorted({r.strategy for r in rows})
    scal_header = ("scenario", "workers", "budget", "log10_budget", "mean", "sem_band_lo", "sem_band_hi",
                   "baseline_mean", "baseline_band_lo", "baseline_band_hi")
    comparison = []
    for strategy in strategies:
        body = []
        for r in sorted((r for r in rows if r.strategy == strategy),
                        key=lambda r: (r.scenario, r.workers, r.budget)):
            base = baseline.get((r.scenario, r.budget))
            base_cols = (base.mean, base.sem_band_lo, base.sem_band_hi) if base else ("", "", "")
            line = (r.scenario, r.workers, r.budget, math.log10(r.budget), r.mean, r.sem_band_lo,
                    r.sem_band_hi, *base_cols)
            body.append(line)
            comparison.append((strategy, *line))
        emit(f"scalability_{strategy}.csv", scal_header, body)
        per_scenario = sorted(((r.workers, r.scenario, r.budget, r.mean, r.successes, r.n)
                               for r in rows if r.strategy == strategy and r.scenario != POOLED_SCENARIO))
        emit(f"per_scenario_{strategy}.csv", ("workers", "scenario", "budget", "mean", "successes", "n"),
             per_scenario)
    emit("comparison.csv", ("strategy",) + scal_header, comparison)
    meta = out / "meta.json"
    meta.write_text(json.dumps({"x_axis": "budget", "x_scale": "log10",
                                "band": "baseline mean +/- 2 * sem over repetitions",
                                "files": [p.name for p in written]}, indent=2))
    written.append(meta)
    return written
