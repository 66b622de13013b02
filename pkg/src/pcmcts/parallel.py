"""Leaf and root parallelisation of the continuous search.

Workers are handed either a private copy of a state (leaf) or a private
tree (root); nothing mutable is shared. Results only depend on the seed
and config: every worker owns a named random stream, and aggregation
uses exactly rounded sums (``math.fsum``) so worker completion order and
tree order never change the outcome.

Without an ``executor`` the workers run one after another in the calling
thread, which gives identical results to any pooled execution.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

from pcmcts.config import SearchConfig
from pcmcts.core import (ActionStat, IterationAborted, _unit_similarity,
                         rollout_stream, run_search, simulate)
from pcmcts.envs.base import Action, Environment, JointAction, State

log = logging.getLogger(__name__)


class StrategyKind(str, Enum):
    SINGLE = "single"
    LEAF_MEAN = "leaf_mean"
    LEAF_MAX = "leaf_max"
    ROOT_MERGE = "root_merge"
    ROOT_VOTE = "root_vote"

    @property
    def is_leaf(self) -> bool:
        return self in (StrategyKind.LEAF_MEAN, StrategyKind.LEAF_MAX)

    @property
    def is_root(self) -> bool:
        return self in (StrategyKind.ROOT_MERGE, StrategyKind.ROOT_VOTE)


BUDGET_MODES = ("full", "divided")


# -- leaf parallelisation ---------------------------------------------------

def aggregate_mean(values: Sequence[Sequence[float]]) -> tuple[float, ...]:
    n = len(values)
    # the final division can round past the extremes (3x/3 > x), so clamp
    return tuple(min(max(math.fsum(column) / n, min(column)), max(column)) for column in zip(*values))


def aggregate_max(values: Sequence[Sequence[float]]) -> tuple[float, ...]:
    return tuple(max(column) for column in zip(*values))


AGGREGATIONS = {"mean": aggregate_mean, "max": aggregate_max}


class LeafWorkerError(RuntimeError):
    pass


def leaf_parallel_simulate(env: Environment, state: State, config: SearchConfig, worker_count: int,
                           aggregation: str = "mean", streams=None, limit: int | None = None,
                           executor: Executor | None = None):
    """Run ``worker_count`` rollouts from ``state`` and aggregate them per agent.

    Returns ``(aggregate, per_worker_values)``. Blocks until every worker has
    finished; if any worker failed, raises :class:`LeafWorkerError` after
    the barrier.
    """
    if worker_count < 1:
        raise ValueError("worker_count must be >= 1")
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation {aggregation!r}")
    if streams is None:
        streams = [rollout_stream(config, 0, k) for k in range(worker_count)]
    if len(streams) != worker_count:
        raise ValueError("one random stream per worker is required")

    results, errors = [], []
    if executor is None:
        for rng in streams:
            try:
                results.append(simulate(env, state, config, rng, limit))
            except Exception as exc:  # reported after the barrier
                errors.append(exc)
    else:
        futures = [executor.submit(simulate, env, state, config, rng, limit) for rng in streams]
        for future in futures:
            try:
                results.append(future.result())
            except Exception as exc:
                errors.append(exc)
    if errors:
        raise LeafWorkerError(f"{len(errors)} of {worker_count} rollout workers failed: {errors[0]!r}")
    return AGGREGATIONS[aggregation](results), results


class LeafRollout:
    """Rollout hook for :func:`run_search` that fans out to several workers."""

    def __init__(self, env: Environment, config: SearchConfig, worker_count: int,
                 aggregation: str = "mean", tree_index: int = 0, executor: Executor | None = None):
        self.env = env
        self.config = config
        self.worker_count = worker_count
        self.aggregation = aggregation
        self.executor = executor
        self.streams = [rollout_stream(config, tree_index, k) for k in range(worker_count)]
        self.weight = worker_count if config.leaf_visit_weight == "workers" else 1
        self.failures = 0

    def __call__(self, state: State, limit: int):
        try:
            value, _ = leaf_parallel_simulate(self.env, state, self.config, self.worker_count,
                                              self.aggregation, self.streams, limit, self.executor)
        except LeafWorkerError as exc:
            self.failures += 1
            log.warning("leaf iteration aborted: %s", exc)
            raise IterationAborted(str(exc)) from exc
        return value, self.weight


# -- root parallelisation ---------------------------------------------------

@dataclass(frozen=True)
class RootSummary:
    """Explored root actions of one tree, per agent, in insertion order."""
    tree_id: int
    stats: tuple[tuple[ActionStat, ...], ...]

    @classmethod
    def from_root(cls, root, tree_id: int) -> RootSummary:
        per_agent = []
        for stats in root.stats:
            per_agent.append(tuple(
                ActionStat(s.action, s.unit, s.index, s.visit_count, s.value_estimate, s.raw_visit_count)
                for s in stats if s.raw_visit_count >= 1))
        return cls(tree_id, tuple(per_agent))

    def best(self, agent: int) -> ActionStat | None:
        best = None
        for s in self.stats[agent]:
            if best is None or s.value_estimate > best.value_estimate:
                best = s
        return best


@dataclass(frozen=True)
class SimilarityMatrix:
    S: tuple[tuple[float, ...], ...]
    V: tuple[float, ...] = ()

    @classmethod
    def build(cls, units: Sequence[Action], kernel_bandwidth: float, votes=()) -> SimilarityMatrix:
        n = len(units)
        rows = [[1.0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                rows[i][j] = rows[j][i] = _unit_similarity(units[i], units[j], kernel_bandwidth)
        matrix = cls(tuple(map(tuple, rows)), tuple(votes))
        assert matrix.check()
        return matrix

    def check(self) -> bool:
        n = len(self.S)
        for i in range(n):
            if self.S[i][i] != 1.0:
                return False
            for j in range(n):
                if not 0.0 <= self.S[i][j] <= 1.0 or self.S[i][j] != self.S[j][i]:
                    return False
        return True

    def scores(self, floor: float = 0.0) -> list[float]:
        """``(S V)_i``, ignoring off-diagonal entries below ``floor``."""
        return [math.fsum(s * v for j, (s, v) in enumerate(zip(row, self.V)) if j == i or s >= floor)
                for i, row in enumerate(self.S)]


def _argmax(values: Sequence[float]) -> int:
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def merged_statistics(summaries: Sequence[RootSummary], agent: int, config: SearchConfig):
    """Pool all trees' root actions and compute kernel-merged visits and values.

    Every merged quantity is computed from the pooled pre-merge statistics,
    so the result does not depend on tree order. Returns
    ``(pool, merged_visits, merged_values)``.
    """
    pool = [s for summary in summaries for s in summary.stats[agent]]
    if not pool:
        raise ValueError("empty action pool")
    matrix = SimilarityMatrix.build([s.unit for s in pool], config.kernel_bandwidth)
    floor = config.similarity_floor
    visits, values = [], []
    for i, a_i in enumerate(pool):
        row = matrix.S[i]
        weights = [(row[j], a_j) for j, a_j in enumerate(pool) if j != i and row[j] >= floor]
        if not weights:
            # n*q/n can round away from q and break exact ties differently from a single tree
            visits.append(float(a_i.visit_count))
            values.append(a_i.value_estimate)
            continue
        n_sim = math.fsum([a_i.visit_count] + [w * a_j.visit_count for w, a_j in weights])
        q_num = math.fsum([a_i.visit_count * a_i.value_estimate]
                          + [w * a_j.visit_count * a_j.value_estimate for w, a_j in weights])
        visits.append(n_sim)
        values.append(q_num / n_sim)
    return pool, visits, values


def similarity_merge(summaries: Sequence[RootSummary], agent: int, config: SearchConfig) -> Action:
    pool, _, values = merged_statistics(summaries, agent, config)
    return pool[_argmax(values)].action


def vote_matrix(summaries: Sequence[RootSummary], agent: int, config: SearchConfig):
    submissions = []
    for summary in summaries:
        best = summary.best(agent)
        if best is None:
            log.warning("tree %d has no explored root action for agent %d; skipped", summary.tree_id, agent)
            continue
        submissions.append(best)
    if not submissions:
        raise ValueError("no tree submitted an action")
    matrix = SimilarityMatrix.build([s.unit for s in submissions], config.kernel_bandwidth,
                                    [s.value_estimate for s in submissions])
    return submissions, matrix


def similarity_vote(summaries: Sequence[RootSummary], agent: int, config: SearchConfig) -> Action:
    submissions, matrix = vote_matrix(summaries, agent, config)
    return submissions[_argmax(matrix.scores(config.similarity_floor))].action


MERGES = {"similarity_merge": similarity_merge, "similarity_vote": similarity_vote}


def grow_tree(env: Environment, root_state: State, config: SearchConfig, tree_index: int) -> RootSummary:
    result = run_search(env, root_state, config, tree_index=tree_index)
    return RootSummary.from_root(result.root, tree_index)


class RootResult(NamedTuple):
    joint_action: JointAction
    summaries: list[RootSummary]
    failures: int


def root_parallel_search(env: Environment, root_state: State, config: SearchConfig, worker_count: int,
                         merge: str = "similarity_vote", executor: Executor | None = None,
                         budget_mode: str = "full") -> RootResult:
    """Grow ``worker_count`` independent trees and merge their root statistics per agent.

    With ``budget_mode="full"`` each tree gets the whole iteration budget;
    ``"divided"`` splits it evenly (at least one iteration per tree).
    """
    if worker_count < 1:
        raise ValueError("worker_count must be >= 1")
    if merge not in MERGES:
        raise ValueError(f"unknown merge {merge!r}")
    if budget_mode not in BUDGET_MODES:
        raise ValueError(f"unknown budget mode {budget_mode!r}")
    if budget_mode == "divided":
        config = config.with_(iteration_budget=max(1, config.iteration_budget // worker_count))

    summaries, failures = [], 0
    if executor is None:
        outcomes = []
        for k in range(worker_count):
            try:
                outcomes.append(grow_tree(env, root_state, config, k))
            except Exception as exc:
                outcomes.append(exc)
    else:
        futures = [executor.submit(grow_tree, env, root_state, config, k) for k in range(worker_count)]
        outcomes = []
        for future in futures:
            try:
                outcomes.append(future.result())
            except Exception as exc:
                outcomes.append(exc)
    for k, outcome in enumerate(outcomes):
        if isinstance(outcome, BaseException):
            failures += 1
            log.warning("root worker %d failed and was dropped: %r", k, outcome)
        else:
            summaries.append(outcome)
    if not summaries:
        raise RuntimeError("all root-parallel workers failed")

    combine = MERGES[merge]
    joint = tuple(combine(summaries, agent, config) for agent in range(env.spec.agent_count))
    return RootResult(joint, summaries, failures)


# -- uniform strategy interface ---------------------------------------------

@dataclass(frozen=True)
class Strategy:
    kind: StrategyKind
    worker_count: int = 1
    budget_mode: str = "full"

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if not isinstance(self.worker_count, int) or self.worker_count < 1:
            raise ValueError("worker_count must be a positive integer")
        if self.kind is StrategyKind.SINGLE and self.worker_count != 1:
            raise ValueError("the single strategy requires worker_count = 1")
        if self.budget_mode not in BUDGET_MODES:
            raise ValueError(f"unknown budget mode {self.budget_mode!r}")

    @property
    def label(self) -> str:
        return self.kind.value

    def plan(self, env: Environment, state: State, config: SearchConfig,
             executor: Executor | None = None) -> JointAction:
        kind = self.kind
        if kind is StrategyKind.SINGLE:
            return run_search(env, state, config).joint_action
        if kind.is_leaf:
            aggregation = "mean" if kind is StrategyKind.LEAF_MEAN else "max"
            rollout = LeafRollout(env, config, self.worker_count, aggregation, executor=executor)
            return run_search(env, state, config, rollout=rollout).joint_action
        merge = "similarity_merge" if kind is StrategyKind.ROOT_MERGE else "similarity_vote"
        return root_parallel_search(env, state, config, self.worker_count, merge, executor,
                                    self.budget_mode).joint_action

