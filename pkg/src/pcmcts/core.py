"""Single-threaded continuous-domain MCTS with decoupled per-agent statistics.

Each tree node keeps, for every agent, a progressively widened list of
sampled continuous actions (:class:`ActionStat`). Agents select
independently (decoupled UCT) and their choices index a joint child.
Returns are shared between nearby actions of the same node through a
Gaussian kernel on bound-normalised actions.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

from pcmcts.config import SearchConfig
from pcmcts.envs.base import Action, Environment, JointAction, Rewards, State
from pcmcts.rng import StreamKey, derive_stream

Bounds = Sequence[tuple[float, float]]


class IterationAborted(RuntimeError):
    """Raised by a rollout to abandon the current iteration without touching the tree."""


class ActionStat:
    """Statistics of one sampled action of one agent at one node.

    ``visit_count`` includes fractional similarity credit; ``raw_visit_count``
    counts direct updates only.
    """
    __slots__ = ("action", "unit", "index", "visit_count", "value_estimate", "raw_visit_count")

    def __init__(self, action: Action, unit: Action | None = None, index: int = 0,
                 visit_count: float = 0.0, value_estimate: float = 0.0, raw_visit_count: int = 0):
        self.action = tuple(action)
        self.unit = self.action if unit is None else tuple(unit)
        self.index = index
        self.visit_count = visit_count
        self.value_estimate = value_estimate
        self.raw_visit_count = raw_visit_count

    def __repr__(self):
        return (f"ActionStat(action={self.action}, N={self.visit_count:.4g}, "
                f"Q={self.value_estimate:.4g}, raw={self.raw_visit_count})")


class TreeNode:
    __slots__ = ("state", "stats", "neighbors", "children", "visit_count", "reward")

    def __init__(self, state: State, agent_count: int, reward: Rewards | None = None):
        self.state = state
        self.stats: list[list[ActionStat]] = [[] for _ in range(agent_count)]
        # neighbors[agent][i] -> [(j, w), ...] for kernel weights w >= similarity_floor
        self.neighbors: list[list[list[tuple[int, float]]]] = [[] for _ in range(agent_count)]
        self.children: dict[tuple[int, ...], TreeNode] = {}
        self.visit_count = 0
        self.reward = reward

    @property
    def agent_count(self) -> int:
        return len(self.stats)

    def iter_nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children[k] for k in sorted(node.children, reverse=True))


class PathStep(NamedTuple):
    node: TreeNode
    chosen: tuple[ActionStat, ...]
    reward: Rewards


@dataclass
class Trajectory:
    """Steps of one iteration: ``(state, joint action, per-agent reward)``.

    ``leaf_value`` is the per-agent value appended after the last step (an
    aggregated leaf-parallel rollout, or zeros when the rollout steps are
    recorded inline).
    """
    steps: list[tuple[State, JointAction, Rewards]]
    discount_factor: float
    leaf_value: Rewards = ()
    return_value: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        self.return_value = self.recompute_return()

    def recompute_return(self) -> tuple[float, ...]:
        if self.steps:
            agents = len(self.steps[0][2])
        else:
            agents = len(self.leaf_value)
        total = list(self.leaf_value) if self.leaf_value else [0.0] * agents
        for _, _, reward in reversed(self.steps):
            for i in range(agents):
                total[i] = reward[i] + self.discount_factor * total[i]
        return tuple(total)


class SearchResult(NamedTuple):
    root: TreeNode
    joint_action: JointAction
    aborted_iterations: int = 0


def uct_value(stat: ActionStat, node_visit_count: int, c: float) -> float:
    if stat.visit_count <= 0:
        raise ValueError("unvisited action has infinite priority")
    if node_visit_count < 1:
        raise ValueError("node visit count must be >= 1")
    return stat.value_estimate + c * math.sqrt(2.0 * math.log(node_visit_count) / stat.visit_count)


def select_child(node: TreeNode, agent: int, config: SearchConfig) -> ActionStat:
    """UCT argmax over the agent's actions; ties go to the earliest inserted."""
    stats = node.stats[agent]
    if not stats:
        raise ValueError("node not expanded")
    # same arithmetic as uct_value, inlined for speed
    two_log_n = 2.0 * math.log(max(node.visit_count, 1))
    c = config.uct_exploration_c
    sqrt = math.sqrt
    best = None
    best_value = -math.inf
    for stat in stats:
        n = stat.visit_count
        if n <= 0:
            raise ValueError("unvisited action has infinite priority")
        value = stat.value_estimate + c * sqrt(two_log_n / n)
        if value > best_value:
            best, best_value = stat, value
    return best


def widening_limit(node_visit_count: float, config: SearchConfig) -> int:
    return max(config.initial_action_count,
               math.floor(config.pw_coefficient * node_visit_count ** config.pw_exponent))


def should_widen(node: TreeNode, agent: int, config: SearchConfig) -> bool:
    return len(node.stats[agent]) < widening_limit(node.visit_count, config)


def sample_action(bounds: Bounds, rng: random.Random) -> Action:
    """Uniform action; consumes exactly one draw per dimension."""
    values = []
    for lo, hi in bounds:
        if lo > hi:
            raise ValueError("inverted bounds")
        values.append(lo + (hi - lo) * rng.random())
    return tuple(values)


def normalize(action: Sequence[float], bounds: Bounds | None) -> Action:
    if bounds is None:
        return tuple(action)
    return tuple((v - lo) / (hi - lo) if hi > lo else 0.0 for v, (lo, hi) in zip(action, bounds))


def similarity(a_i: Sequence[float], a_j: Sequence[float], kernel_bandwidth: float,
               bounds: Bounds | None = None) -> float:
    """Gaussian kernel ``exp(-gamma * |a_i - a_j|^2)`` on bound-normalised actions."""
    if len(a_i) != len(a_j):
        raise ValueError(f"dimension mismatch: {len(a_i)} vs {len(a_j)}")
    u, v = normalize(a_i, bounds), normalize(a_j, bounds)
    return math.exp(-kernel_bandwidth * sum((x - y) ** 2 for x, y in zip(u, v)))


def _unit_similarity(u: Action, v: Action, gamma: float) -> float:
    d2 = 0.0
    for x, y in zip(u, v):
        d2 += (x - y) * (x - y)
    return math.exp(-gamma * d2)


def add_action(node: TreeNode, agent: int, action: Action, config: SearchConfig,
               bounds: Bounds | None = None) -> ActionStat:
    """Append a freshly sampled action and cache its kernel neighbours."""
    stats = node.stats[agent]
    stat = ActionStat(action, normalize(action, bounds), index=len(stats))
    own: list[tuple[int, float]] = []
    gamma, floor = config.kernel_bandwidth, config.similarity_floor
    neighbors = node.neighbors[agent]
    for other in stats:
        w = _unit_similarity(stat.unit, other.unit, gamma)
        if w >= floor and w > 0.0:
            own.append((other.index, w))
            neighbors[other.index].append((stat.index, w))
    stats.append(stat)
    neighbors.append(own)
    return stat


def simulate(env: Environment, state: State, config: SearchConfig, rng: random.Random,
             limit: int | None = None, trace: list | None = None) -> tuple[float, ...]:
    """Uniform random rollout from ``state``; discounted per-agent reward sum.

    The first rollout step is undiscounted. ``limit`` is the absolute depth
    at which the rollout stops (defaults to the smaller of the environment
    horizon and ``planning_horizon``).
    """
    spec = env.spec
    if limit is None:
        limit = min(spec.horizon, config.planning_horizon)
    agents = spec.agent_count
    bounds = spec.action_bounds
    rewards = []
    while not state.terminal and state.depth < limit:
        joint = tuple(sample_action(bounds, rng) for _ in range(agents))
        next_state, reward, _ = env.step(state, joint, rng)
        if trace is not None:
            trace.append((state, joint, reward))
        rewards.append(reward)
        state = next_state
    gamma = config.discount_factor
    total = [0.0] * agents
    for reward in reversed(rewards):
        for i in range(agents):
            total[i] = reward[i] + gamma * total[i]
    return tuple(total)


def similarity_update(node: TreeNode, agent: int, source: ActionStat, return_value: float,
                      config: SearchConfig, weight: float = 1.0) -> None:
    """Credit ``return_value`` to the source's kernel neighbours, weighted by similarity.

    Neighbours are cached by :func:`add_action`, which applies
    ``similarity_floor`` with the same config.
    """
    stats = node.stats[agent]
    for j, w in node.neighbors[agent][source.index]:
        other = stats[j]
        credit = w * weight
        other.visit_count += credit
        other.value_estimate += (credit / other.visit_count) * (return_value - other.value_estimate)


def backpropagate(path: Sequence[PathStep], leaf_return: Sequence[float], config: SearchConfig,
                  weight: int = 1) -> None:
    """Propagate the discounted return-to-go from the leaf back to the root."""
    if not path:
        raise ValueError("empty path")
    gamma = config.discount_factor
    ret = list(leaf_return)
    for node, chosen, reward in reversed(path):
        node.visit_count += weight
        for agent, stat in enumerate(chosen):
            ret[agent] = reward[agent] + gamma * ret[agent]
            stats = node.stats[agent]
            if stat.index >= len(stats) or stats[stat.index] is not stat:
                raise ValueError("corrupt path")
            stat.raw_visit_count += weight
            stat.visit_count += weight
            stat.value_estimate += (weight / stat.visit_count) * (ret[agent] - stat.value_estimate)
            similarity_update(node, agent, stat, ret[agent], config, weight)


def best_action(node: TreeNode, agent: int) -> ActionStat:
    """Final selection: highest value estimate among directly visited actions."""
    best = None
    for stat in node.stats[agent]:
        if stat.raw_visit_count >= 1 and (best is None or stat.value_estimate > best.value_estimate):
            best = stat
    if best is None:
        raise ValueError("no explored action at node")
    return best


def search_limit(env: Environment, root_state: State, config: SearchConfig) -> int:
    return min(env.spec.horizon, root_state.depth + config.planning_horizon)


def tree_streams(config: SearchConfig, tree_index: int):
    """(expansion, transition) streams of one tree; rollout worker k uses :func:`rollout_stream`."""
    base = StreamKey(config.rng_seed, (("tree", tree_index),))
    return derive_stream(base.child("expand")), derive_stream(base.child("transition"))


def rollout_stream(config: SearchConfig, tree_index: int, worker: int) -> random.Random:
    return derive_stream(StreamKey(config.rng_seed, (("tree", tree_index), ("rollout", worker))))


Rollout = Callable[[State, int], tuple[tuple[float, ...], int]]


def run_search(env: Environment, root_state: State, config: SearchConfig, *,
               tree_index: int = 0, rollout: Rollout | None = None,
               trajectories: list | None = None) -> SearchResult:
    """Run ``config.iteration_budget`` select/expand/simulate/backpropagate iterations.

    ``rollout(state, limit)`` returns ``(per-agent value, visit weight)``;
    the default is a single uniform rollout with weight 1. Iterations whose
    expanded child is terminal use the hook's ``weight`` attribute. A rollout may
    raise :class:`IterationAborted`, in which case nothing is written to the
    tree for that iteration.
    """
    if root_state.terminal:
        raise ValueError("nothing to plan")
    spec = env.spec
    agents = spec.agent_count
    bounds = spec.action_bounds
    limit = search_limit(env, root_state, config)
    expand_rng, transition_rng = tree_streams(config, tree_index)
    zeros = (0.0,) * agents

    record_inline = False
    if rollout is None:
        sim_rng = rollout_stream(config, tree_index, 0)
        record_inline = trajectories is not None

        def rollout(state, lim, _trace=None):
            return simulate(env, state, config, sim_rng, lim, _trace), 1

    # iterations that end on a terminal child skip the rollout but count the same
    default_weight = getattr(rollout, "weight", 1)
    root = TreeNode(root_state, agents)
    aborted = 0
    for _ in range(config.iteration_budget):
        node = root
        steps: list[tuple[TreeNode, tuple[int, ...], Rewards]] = []
        pending = None
        sim_trace = [] if record_inline else None
        leaf_value, weight = zeros, default_weight
        dropped = False
        while True:
            state = node.state
            if state.terminal or state.depth >= limit:
                break
            key = []
            new_actions = []
            width = widening_limit(node.visit_count, config)
            for agent in range(agents):
                if len(node.stats[agent]) < width:
                    action = sample_action(bounds, expand_rng)
                    new_actions.append((agent, action))
                    key.append(len(node.stats[agent]))
                else:
                    key.append(select_child(node, agent, config).index)
            key = tuple(key)
            child = node.children.get(key)
            if child is None:
                new_map = dict(new_actions)
                joint = tuple(new_map[a] if a in new_map else node.stats[a][key[a]].action
                              for a in range(agents))
                next_state, reward, _ = env.step(state, joint, transition_rng)
                child = TreeNode(next_state, agents, tuple(reward))
                pending = (node, key, child, new_actions)
                steps.append((node, key, child.reward))
                if not next_state.terminal and next_state.depth < limit:
                    try:
                        if record_inline:
                            leaf_value, weight = rollout(next_state, limit, sim_trace)
                        else:
                            leaf_value, weight = rollout(next_state, limit)
                    except IterationAborted:
                        dropped = True
                break
            steps.append((node, key, child.reward))
            node = child
        if dropped:
            aborted += 1
            continue
        if pending is not None:
            parent, key, child, new_actions = pending
            for agent, action in new_actions:
                add_action(parent, agent, action, config, bounds)
            parent.children[key] = child
        path = [PathStep(n, tuple(n.stats[a][k[a]] for a in range(agents)), r) for n, k, r in steps]
        if trajectories is not None:
            recorded = [(n.state, tuple(s.action for s in chosen), r) for n, chosen, r in path]
            if record_inline:
                recorded.extend(sim_trace)
                trajectories.append(Trajectory(recorded, config.discount_factor, zeros))
            else:
                trajectories.append(Trajectory(recorded, config.discount_factor, tuple(leaf_value)))
        backpropagate(path, leaf_value, config, weight)

    joint_action = tuple(best_action(root, a).action for a in range(agents))
    return SearchResult(root, joint_action, aborted)


def tree_signature(root: TreeNode) -> list:
    """Hashable dump of every node's statistics, for bit-equality checks."""
    out = []
    for node in root.iter_nodes():
        out.append((node.state, node.visit_count,
                    tuple(tuple((s.action, s.visit_count, s.value_estimate, s.raw_visit_count)
                                for s in stats) for stats in node.stats)))
    return out
