"""Common environment interface used by the search and the harness."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

Action = tuple[float, ...]
JointAction = tuple[Action, ...]
Rewards = tuple[float, ...]


@dataclass(frozen=True)
class State:
    """Environment state.

    ``depth`` counts steps since the start of the episode. ``collided`` marks
    a failed terminal state (collision, crash, leaving the corridor).
    """
    values: tuple[float, ...]
    depth: int = 0
    terminal: bool = False
    collided: bool = False


@dataclass(frozen=True)
class EnvironmentSpec:
    name: str
    agent_count: int
    action_dimension: int
    action_bounds: tuple[tuple[float, float], ...]
    horizon: int

    def __post_init__(self):
        if self.agent_count < 1 or self.action_dimension < 1:
            raise ValueError("agent_count and action_dimension must be positive")
        if len(self.action_bounds) != self.action_dimension:
            raise ValueError("one [lo, hi] pair is required per action dimension")
        for lo, hi in self.action_bounds:
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"invalid action bounds [{lo}, {hi}]")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


class ActionOutOfBounds(ValueError):
    pass


class Environment:
    """Base class; subclasses define ``spec``, ``initial_state`` and ``step``.

    ``step`` returns ``(next_state, per_agent_rewards, terminal)`` and must
    mark every state at ``depth == horizon`` terminal.
    """
    spec: EnvironmentSpec

    def initial_state(self) -> State:
        raise NotImplementedError

    def step(self, state: State, joint_action: JointAction,
             rng: random.Random | None = None) -> tuple[State, Rewards, bool]:
        raise NotImplementedError

    def is_success(self, state: State) -> bool:
        """Episode outcome: horizon reached without a collision."""
        return state.depth >= self.spec.horizon and not state.collided

    def check_joint_action(self, state: State, joint_action: Sequence[Sequence[float]]) -> None:
        if state.terminal:
            raise ValueError("cannot step from a terminal state")
        if len(joint_action) != self.spec.agent_count:
            raise ValueError(f"expected {self.spec.agent_count} agent actions, got {len(joint_action)}")
        for action in joint_action:
            if len(action) != self.spec.action_dimension:
                raise ValueError(f"action {action} has wrong dimension")
            for value, (lo, hi) in zip(action, self.spec.action_bounds):
                if not lo <= value <= hi:
                    raise ActionOutOfBounds(f"action component {value} outside [{lo}, {hi}]")
