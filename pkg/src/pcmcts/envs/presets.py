"""Named scenario presets addressable from the CLI and plan files."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from pcmcts.config import SearchConfig
from pcmcts.envs.base import Environment
from pcmcts.envs.merge import CoopMerge, Vehicle
from pcmcts.envs.narrow import NarrowPassage
from pcmcts.envs.toy import ToyLinear, ToyParabola


@dataclass(frozen=True)
class Preset:
    """A scenario plus the search constants tuned for it.

    ``scoring`` is False for presets the single-threaded planner already
    solves almost always; those are left out of pooled scalability scores.
    Every preset replans after each executed step.
    """
    name: str
    make: Callable[[], Environment]
    search: dict = field(default_factory=dict)
    scoring: bool = True
    description: str = ""

    def env(self) -> Environment:
        return self.make()

    def config(self, **overrides) -> SearchConfig:
        return SearchConfig(**{**self.search, **overrides})


# Shared by the merge presets: a crash ends the episode with no penalty, so it
# only forfeits the remaining reward and every root value stays non-negative.
# The similarity vote scores agreement by S.V, which needs V >= 0 to reward it.
MERGE_PRESET_CONSTANTS = dict(width=0.6, collision_reward=0.0, lane_weight=0.5, speed_weight=0.5)


def _merge_2a_easy():
    return CoopMerge("merge-2a-easy", [Vehicle(0.0, 0.0, 10.0), Vehicle(30.0, 1.0, 10.0)],
                     lane_end=60.0, horizon=5, constants=MERGE_PRESET_CONSTANTS)


def _merge_3a_tight():
    return CoopMerge("merge-3a-tight",
                     [Vehicle(0.0, 0.0, 10.0), Vehicle(4.0, 1.0, 10.0), Vehicle(-4.0, 1.0, 10.0)],
                     lane_end=25.0, horizon=4, constants=MERGE_PRESET_CONSTANTS)


def _merge_4a_dense():
    return CoopMerge("merge-4a-dense",
                     [Vehicle(0.0, 0.0, 10.0), Vehicle(4.0, 1.0, 10.0), Vehicle(-4.0, 1.0, 10.0),
                      Vehicle(-10.0, 0.0, 10.0)],
                     lane_end=25.0, horizon=4, constants=MERGE_PRESET_CONSTANTS)


MERGE_SEARCH = dict(uct_exploration_c=2.0, pw_coefficient=0.5, pw_exponent=0.5,
                    kernel_bandwidth=20.0, discount_factor=1.0, planning_horizon=5)

PRESETS: dict[str, Preset] = {
    p.name: p for p in [
        Preset("merge-2a-easy", _merge_2a_easy, MERGE_SEARCH, scoring=False,
               description="merger and one lane-1 vehicle with a wide gap"),
        Preset("merge-3a-tight", _merge_3a_tight, MERGE_SEARCH,
               description="merger must slot between two lane-1 vehicles 8 m apart before lane 0 ends"),
        Preset("merge-4a-dense", _merge_4a_dense, MERGE_SEARCH,
               description="tight merge with an extra vehicle following on lane 0"),
        Preset("narrow-5pct", NarrowPassage,
               dict(uct_exploration_c=0.5, pw_coefficient=3.0, pw_exponent=0.5,
                    kernel_bandwidth=2000.0, planning_horizon=3),
               description="3-step corridor passable only through a 5% action band"),
        Preset("toy-parabola", ToyParabola,
               dict(uct_exploration_c=0.5, kernel_bandwidth=200.0, planning_horizon=1),
               scoring=False, description="one-shot reward 1 - (a - 0.7)^2"),
        Preset("toy-linear", ToyLinear,
               dict(uct_exploration_c=0.5, kernel_bandwidth=200.0, planning_horizon=1),
               scoring=False, description="one-shot reward a"),
    ]
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown scenario preset {name!r}; known: {sorted(PRESETS)}") from None
