"""Single-agent precision task: a corridor that only a narrow action band passes.

Each step the agent picks a scalar in [0, 1]. Inside the corridor (every
step after the first) actions within the band (``width`` wide, centred on
``band_center``) earn +1 and advance; any other action ends the episode
with reward 0. Finishing the corridor adds ``finish_bonus`` to the last
step.

The first step is the entrance: actions in ``entrance`` (+1) step into the
corridor, actions on the ``exit_ramp`` end the episode with
``exit_reward``, anything else ends it with 0. The ramp pays more than a
typical random walk through the corridor but far less than finishing it,
so an evaluation that averages rollouts prefers the ramp while one that
keeps the best rollout enters.
"""
from __future__ import annotations

from pcmcts.envs.base import Environment, EnvironmentSpec, State


class NarrowPassage(Environment):
    def __init__(self, name="narrow-5pct", width=0.05, band_center=0.8, horizon=3,
                 entrance=(0.5, 0.95), exit_ramp=(0.1, 0.4), exit_reward=1.6,
                 finish_bonus=5.0, noise=0.0):
        if not 0 < width <= 1:
            raise ValueError("band width must be a fraction of the action range in (0, 1]")
        self.spec = EnvironmentSpec(name, agent_count=1, action_dimension=1,
                                    action_bounds=((0.0, 1.0),), horizon=horizon)
        self.width = width
        self.band_center = band_center
        self.entrance = entrance
        self.exit_ramp = exit_ramp
        self.exit_reward = exit_reward
        self.finish_bonus = finish_bonus
        self.noise = noise

    def initial_state(self) -> State:
        return State(values=(0.0,), depth=0)

    def in_band(self, a: float) -> bool:
        return abs(a - self.band_center) <= self.width / 2

    def passes(self, a: float, depth: int) -> bool:
        if depth == 0 and self.entrance is not None:
            return self.entrance[0] <= a <= self.entrance[1]
        return self.in_band(a)

    def on_exit_ramp(self, a: float, depth: int) -> bool:
        return self.exit_ramp is not None and depth == 0 and self.exit_ramp[0] <= a <= self.exit_ramp[1]

    def step(self, state, joint_action, rng=None):
        self.check_joint_action(state, joint_action)
        a = joint_action[0][0]
        if self.noise > 0.0:
            if rng is None:
                raise ValueError("a noisy corridor needs a random stream")
            a = min(1.0, max(0.0, a + rng.gauss(0.0, self.noise)))
        depth = state.depth + 1
        if self.passes(a, state.depth):
            done = depth >= self.spec.horizon
            reward = 1.0 + (self.finish_bonus if done else 0.0)
            return State((state.values[0] + 1.0,), depth, terminal=done), (reward,), done
        reward = self.exit_reward if self.on_exit_ramp(a, state.depth) else 0.0
        return State(state.values, depth, terminal=True, collided=True), (reward,), True

    def band_probability(self) -> float:
        lo = max(0.0, self.band_center - self.width / 2)
        hi = min(1.0, self.band_center + self.width / 2)
        return max(0.0, hi - lo)

    def optimal_return(self) -> float:
        return self.spec.horizon + self.finish_bonus
