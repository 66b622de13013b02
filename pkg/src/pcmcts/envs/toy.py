"""One-step single-agent worlds with closed-form optima, used as oracles."""
from __future__ import annotations

from pcmcts.envs.base import Environment, EnvironmentSpec, State

PARABOLA_PEAK = 0.7
SUCCESS_TOLERANCE = 0.05


def parabola_reward(a: float) -> float:
    return 1.0 - (a - PARABOLA_PEAK) ** 2


def toy_world_optimal() -> tuple[float, float]:
    return PARABOLA_PEAK, parabola_reward(PARABOLA_PEAK)


class OneShotWorld(Environment):
    """Choose a scalar in [0, 1] once; the episode ends after one step."""

    name = "one-shot"

    def __init__(self):
        self.spec = EnvironmentSpec(self.name, agent_count=1, action_dimension=1,
                                    action_bounds=((0.0, 1.0),), horizon=1)

    def reward(self, a: float) -> float:
        raise NotImplementedError

    def initial_state(self) -> State:
        return State(values=(0.0,), depth=0)

    def step(self, state, joint_action, rng=None):
        self.check_joint_action(state, joint_action)
        a = joint_action[0][0]
        return State(values=(a,), depth=state.depth + 1, terminal=True), (self.reward(a),), True


class ToyParabola(OneShotWorld):
    """reward(a) = 1 - (a - 0.7)^2; success means the chosen a is within 0.05 of 0.7."""

    name = "toy-parabola"

    def reward(self, a):
        return parabola_reward(a)

    def is_success(self, state):
        return state.terminal and abs(state.values[0] - PARABOLA_PEAK) <= SUCCESS_TOLERANCE


class ToyLinear(OneShotWorld):
    """reward(a) = a; the optimum is the upper bound a = 1."""

    name = "toy-linear"

    def reward(self, a):
        return a

    def is_success(self, state):
        return state.terminal and state.values[0] >= 0.9
