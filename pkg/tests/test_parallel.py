import math
from concurrent.futures import ThreadPoolExecutor

import pytest

from pcmcts.config import SearchConfig
from pcmcts.core import ActionStat, run_search, tree_signature
from pcmcts.envs import NarrowPassage, ToyParabola, get_preset
from pcmcts.envs.base import Environment, EnvironmentSpec, State
from pcmcts.parallel import (LeafRollout, RootSummary, SimilarityMatrix, Strategy, StrategyKind,
                             aggregate_max, aggregate_mean, leaf_parallel_simulate, merged_statistics,
                             root_parallel_search, similarity_merge, similarity_vote)


def summary(tree_id, *entries):
    """entries: (action, Q, N) for agent 0."""
    stats = tuple(ActionStat((a,), (a,), i, n, q, int(n)) for i, (a, q, n) in enumerate(entries))
    return RootSummary(tree_id, (stats,))


# -- leaf ------------------------------------------------------------------

def test_leaf_aggregation_examples():
    assert aggregate_mean([(1.0,), (3.0,)]) == (2.0,)
    assert aggregate_max([(1.0,), (3.0,)]) == (3.0,)
    assert aggregate_mean([(1.0, -2.0), (3.0, 4.0), (2.0, 1.0)]) == (2.0, 1.0)


class Det(Environment):
    def __init__(self):
        self.spec = EnvironmentSpec("det", 1, 1, ((0.0, 1.0),), 3)

    def initial_state(self):
        return State((0.0,))

    def step(self, state, joint_action, rng=None):
        d = state.depth + 1
        return State((0.0,), d, terminal=d >= 3), (2.0,), d >= 3


def test_leaf_deterministic_env_mean_equals_max():
    env = Det()
    cfg = SearchConfig()
    mean, runs = leaf_parallel_simulate(env, env.initial_state(), cfg, 6, "mean")
    assert mean == leaf_parallel_simulate(env, env.initial_state(), cfg, 6, "max")[0] == runs[0] == (6.0,)


def test_leaf_worker_failure_aborts_iteration(monkeypatch):
    import pcmcts.parallel as par
    real = par.simulate
    calls = []

    def flaky(env, state, config, rng, limit=None):
        calls.append(1)
        if len(calls) % 7 == 0:
            raise RuntimeError("worker crashed")
        return real(env, state, config, rng, limit)

    monkeypatch.setattr(par, "simulate", flaky)
    env = NarrowPassage()
    cfg = SearchConfig(iteration_budget=40)
    rollout = LeafRollout(env, cfg, 4)
    result = run_search(env, env.initial_state(), cfg, rollout=rollout)
    assert result.aborted_iterations == rollout.failures > 0
    assert result.root.visit_count == 40 - result.aborted_iterations


def test_leaf_single_worker_matches_single():
    env = NarrowPassage()
    cfg = SearchConfig(iteration_budget=200, rng_seed=4)
    for kind in ("leaf_mean", "leaf_max"):
        rollout = LeafRollout(env, cfg, 1, "mean" if kind == "leaf_mean" else "max")
        a = run_search(env, env.initial_state(), cfg, rollout=rollout)
        b = run_search(env, env.initial_state(), cfg)
        assert tree_signature(a.root) == tree_signature(b.root)


def test_leaf_visit_weight_flag():
    env = NarrowPassage()
    cfg = SearchConfig(iteration_budget=50, leaf_visit_weight="workers")
    root = run_search(env, env.initial_state(), cfg, rollout=LeafRollout(env, cfg, 4)).root
    assert root.visit_count == 4 * 50


def test_leaf_executor_matches_serial():
    env = NarrowPassage()
    state = State((1.0,), 1)
    cfg = SearchConfig(rng_seed=3)
    serial = leaf_parallel_simulate(env, state, cfg, 8, "max")
    with ThreadPoolExecutor(4) as pool:
        threaded = leaf_parallel_simulate(env, state, cfg, 8, "max", executor=pool)
    assert serial == threaded


# -- root: merge -----------------------------------------------------------

def test_merge_far_actions_reduces_to_argmax():
    cfg = SearchConfig(kernel_bandwidth=1e6)
    s = [summary(0, (0.1, 0.3, 4)), summary(1, (0.9, 0.7, 2))]
    assert similarity_merge(s, 0, cfg) == (0.9,)


def test_merge_isolated_values_exact():
    # 3 * 1.6 / 3 rounds above 1.6; an isolated action must keep its own Q so ties stay ties
    cfg = SearchConfig(kernel_bandwidth=1e12)
    s = [summary(0, (0.2, 1.6, 1), (0.3, 1.6, 3))]
    _, visits, values = merged_statistics(s, 0, cfg)
    assert values == [1.6, 1.6] and visits == [1.0, 3.0]
    assert similarity_merge(s, 0, cfg) == (0.2,)


def test_merge_statistics_hand_computed():
    cfg = SearchConfig(kernel_bandwidth=1.0, similarity_floor=0.0)
    s = [summary(0, (0.0, 1.0, 2)), summary(1, (1.0, 0.0, 1))]
    pool, visits, values = merged_statistics(s, 0, cfg)
    w = math.exp(-1)
    assert visits == pytest.approx([2 + w, 1 + 2 * w], abs=1e-12)
    assert values == pytest.approx([2 / (2 + w), 2 * w / (1 + 2 * w)], abs=1e-12)


def test_merge_order_independent():
    cfg = SearchConfig(kernel_bandwidth=3.0, similarity_floor=0.0)
    a = summary(0, (0.2, 0.5, 3), (0.6, 0.4, 2))
    b = summary(1, (0.25, 0.1, 5), (0.9, 0.8, 1))
    m1 = merged_statistics([a, b], 0, cfg)
    m2 = merged_statistics([b, a], 0, cfg)
    by_action = lambda m: sorted(zip([s.action for s in m[0]], m[1], m[2]))
    assert by_action(m1) == by_action(m2)


def test_merge_empty_pool():
    with pytest.raises(ValueError):
        similarity_merge([RootSummary(0, ((),))], 0, SearchConfig())


# -- root: vote ------------------------------------------------------------

def test_vote_one_tree():
    assert similarity_vote([summary(0, (0.2, 0.1, 1), (0.4, 0.9, 1))], 0, SearchConfig()) == (0.4,)


def test_vote_unanimous_any_gamma():
    trees = [summary(i, (0.3, 1.0, 2), (0.8, 0.5 + i / 10, 1)) for i in range(3)]
    for gamma in (1e-3, 1.0, 1e6):
        assert similarity_vote(trees, 0, SearchConfig(kernel_bandwidth=gamma)) == (0.3,)


def test_vote_coincident_pair_beats_lone_high_q():
    cfg = SearchConfig(kernel_bandwidth=1e6)
    trees = [summary(0, (0.2, 1.0, 3)), summary(1, (0.2, 1.0, 3)), summary(2, (0.9, 1.5, 3))]
    assert similarity_vote(trees, 0, cfg) == (0.2,)


def test_vote_outlier_never_wins():
    cfg = SearchConfig(kernel_bandwidth=1e6)
    trees = [summary(0, (0.2, 1.0, 3)), summary(1, (0.2001, 0.9, 3)), summary(2, (0.9, 0.5, 3))]
    s = SimilarityMatrix.build([(0.2,), (0.2001,), (0.9,)], 1e6, [1.0, 0.9, 0.5])
    assert s.scores()[2] == pytest.approx(0.5)
    assert similarity_vote(trees, 0, cfg) != (0.9,)


def test_vote_skips_empty_tree():
    trees = [RootSummary(0, ((),)), summary(1, (0.4, 1.0, 1))]
    assert similarity_vote(trees, 0, SearchConfig()) == (0.4,)
    with pytest.raises(ValueError):
        similarity_vote([RootSummary(0, ((),))], 0, SearchConfig())


def test_similarity_matrix_check():
    m = SimilarityMatrix.build([(0.0,), (0.5,), (1.0,)], 2.0, [1, 1, 1])
    assert m.check()
    assert not SimilarityMatrix(((1.0, 0.2), (0.3, 1.0))).check()


# -- root search + strategy ------------------------------------------------

def test_root_single_worker_equals_single_tree():
    env = ToyParabola()
    cfg = SearchConfig(iteration_budget=100, rng_seed=12, kernel_bandwidth=1e9)
    single = run_search(env, env.initial_state(), cfg).joint_action
    for merge in ("similarity_vote", "similarity_merge"):
        assert root_parallel_search(env, env.initial_state(), cfg, 1, merge).joint_action == single


def test_root_drops_failed_trees(monkeypatch):
    import pcmcts.parallel as par
    env = ToyParabola()
    cfg = SearchConfig(iteration_budget=20)
    real = par.grow_tree

    def grow(env, state, config, k):
        if k == 1:
            raise RuntimeError("worker died")
        return real(env, state, config, k)

    monkeypatch.setattr(par, "grow_tree", grow)
    result = root_parallel_search(env, env.initial_state(), cfg, 3)
    assert result.failures == 1 and [s.tree_id for s in result.summaries] == [0, 2]

    def dead(*args):
        raise RuntimeError("worker died")

    monkeypatch.setattr(par, "grow_tree", dead)
    with pytest.raises(RuntimeError, match="all root-parallel workers failed"):
        root_parallel_search(env, env.initial_state(), cfg, 2)


def test_root_divided_budget():
    env = ToyParabola()
    cfg = SearchConfig(iteration_budget=80)
    res = root_parallel_search(env, env.initial_state(), cfg, 4, budget_mode="divided")
    assert all(sum(s.raw_visit_count for s in summ.stats[0]) == 20 for summ in res.summaries)


def test_root_executor_matches_serial():
    env = get_preset("merge-2a-easy").env()
    cfg = get_preset("merge-2a-easy").config(iteration_budget=60, rng_seed=5)
    serial = root_parallel_search(env, env.initial_state(), cfg, 3)
    with ThreadPoolExecutor(3) as pool:
        threaded = root_parallel_search(env, env.initial_state(), cfg, 3, executor=pool)
    assert serial.joint_action == threaded.joint_action


def test_strategy_validation():
    with pytest.raises(ValueError):
        Strategy("single", 2)
    with pytest.raises(ValueError):
        Strategy("root_vote", 0)
    with pytest.raises(ValueError):
        Strategy("tree_parallel", 1)
    assert Strategy("leaf_max", 8).kind is StrategyKind.LEAF_MAX
    assert StrategyKind.ROOT_MERGE.is_root and StrategyKind.LEAF_MEAN.is_leaf


def test_strategies_return_in_bounds_joint_actions():
    env = get_preset("merge-3a-tight").env()
    cfg = get_preset("merge-3a-tight").config(iteration_budget=30)
    for kind in StrategyKind:
        joint = Strategy(kind, 1 if kind is StrategyKind.SINGLE else 3).plan(env, env.initial_state(), cfg)
        env.check_joint_action(env.initial_state(), joint)
