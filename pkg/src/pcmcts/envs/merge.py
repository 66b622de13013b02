"""Cooperative lane-merge task for several vehicles on a two-lane road.

Lane 0 ends at ``lane_end``; the vehicles must arrange themselves so that
everyone reaches the horizon on lane 1 without touching. Kinematics are a
point-mass model with a discrete time step; all constants live in
:data:`CONSTANTS` so the reward is fully declared.
"""
from __future__ import annotations

from dataclasses import dataclass

from pcmcts.envs.base import Environment, EnvironmentSpec, State

CONSTANTS = {
    "dt": 1.0,                  # s per step
    "accel": (-3.0, 3.0),       # m/s^2, action dimension 0
    "lateral": (-0.5, 0.5),     # lanes per step, action dimension 1
    "v_max": 20.0,              # m/s
    "v_desired": 10.0,          # m/s
    "length": 5.0,              # m, longitudinal collision envelope
    "width": 0.8,               # lanes, lateral collision envelope
    "lane_weight": 0.25,        # shaping per step for sitting on the goal lane
    "speed_weight": 0.25,       # shaping per step for holding v_desired
    "goal_tolerance": 0.25,     # lanes, "on the goal lane" for the bonus
    "collision_reward": -10.0,
    "success_bonus": 10.0,
    "reward_clip": 10.0,
}


@dataclass(frozen=True)
class Vehicle:
    x: float
    y: float
    v: float
    goal_lane: float = 1.0


class CoopMerge(Environment):
    """State values are ``(x_0, y_0, v_0, x_1, y_1, v_1, ...)``.

    A collision (vehicle overlap, or a vehicle on lane 0 past its end) gives
    every agent the collision reward and ends the episode; the task is
    cooperative, so the penalty is shared.
    """

    def __init__(self, name: str, vehicles: list[Vehicle], lane_end: float, horizon: int,
                 constants: dict | None = None):
        self.c = dict(CONSTANTS, **(constants or {}))
        self.spec = EnvironmentSpec(name, agent_count=len(vehicles), action_dimension=2,
                                    action_bounds=(self.c["accel"], self.c["lateral"]), horizon=horizon)
        self.vehicles = tuple(vehicles)
        self.goals = tuple(v.goal_lane for v in vehicles)
        self.lane_end = lane_end

    def initial_state(self) -> State:
        values = []
        for veh in self.vehicles:
            values.extend((veh.x, veh.y, veh.v))
        return State(tuple(float(v) for v in values), depth=0)

    def positions(self, state: State) -> list[tuple[float, float, float]]:
        vals = state.values
        return [(vals[3 * i], vals[3 * i + 1], vals[3 * i + 2]) for i in range(self.spec.agent_count)]

    def overlap(self, a: tuple[float, float], b: tuple[float, float]) -> bool:
        return abs(a[0] - b[0]) < self.c["length"] and abs(a[1] - b[1]) < self.c["width"]

    def off_road(self, x: float, y: float) -> bool:
        return y < 0.5 and x >= self.lane_end

    def collides(self, points: list[tuple[float, float]]) -> bool:
        n = len(points)
        for i in range(n):
            if self.off_road(*points[i]):
                return True
            for j in range(i + 1, n):
                if self.overlap(points[i], points[j]):
                    return True
        return False

    def shaping(self, y: float, v: float, goal: float) -> float:
        c = self.c
        lane_err = min(abs(y - goal), 1.0)
        speed_err = min(abs(v - c["v_desired"]) / c["v_desired"], 1.0)
        return c["lane_weight"] * (1.0 - lane_err) + c["speed_weight"] * (1.0 - speed_err)

    def step(self, state, joint_action, rng=None):
        self.check_joint_action(state, joint_action)
        c = self.c
        dt, v_max = c["dt"], c["v_max"]
        old = self.positions(state)
        new = []
        for (x, y, v), (accel, lateral) in zip(old, joint_action):
            v2 = min(v_max, max(0.0, v + accel * dt))
            x2 = x + 0.5 * (v + v2) * dt
            y2 = min(1.0, max(0.0, y + lateral))
            new.append((x2, y2, v2))
        depth = state.depth + 1
        values = tuple(val for veh in new for val in veh)
        mid = [(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])) for a, b in zip(old, new)]
        if self.collides(mid) or self.collides([(x, y) for x, y, _ in new]):
            penalty = (c["collision_reward"],) * self.spec.agent_count
            return State(values, depth, terminal=True, collided=True), penalty, True
        done = depth >= self.spec.horizon
        rewards = [self.shaping(y, v, g) for (_, y, v), g in zip(new, self.goals)]
        if done and all(abs(y - g) <= c["goal_tolerance"] for (_, y, _), g in zip(new, self.goals)):
            rewards = [r + c["success_bonus"] for r in rewards]
        clip = c["reward_clip"]
        rewards = tuple(min(clip, max(-clip, r)) for r in rewards)
        return State(values, depth, terminal=done), rewards, done
