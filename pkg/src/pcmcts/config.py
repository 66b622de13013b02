from __future__ import annotations

import math
from dataclasses import dataclass, replace

from pcmcts.rng import SEED_MASK

LEAF_VISIT_WEIGHTS = ("one", "workers")


@dataclass(frozen=True)
class SearchConfig:
    """Tunable constants of one search.

    ``similarity_floor`` drops kernel weights below it; a floor of 1.0
    restricts sharing to coincident actions, which disables it in practice.
    ``leaf_visit_weight`` picks whether a leaf-parallel aggregate counts as
    one visit ("one") or as ``worker_count`` visits ("workers").
    """
    uct_exploration_c: float = 1.0
    pw_coefficient: float = 1.0
    pw_exponent: float = 0.5
    kernel_bandwidth: float = 50.0
    discount_factor: float = 1.0
    planning_horizon: int = 50
    iteration_budget: int = 100
    initial_action_count: int = 1
    similarity_floor: float = 1e-4
    rng_seed: int = 0
    leaf_visit_weight: str = "one"

    def __post_init__(self):
        def check(ok, msg):
            if not ok:
                raise ValueError(msg)

        check(self.uct_exploration_c > 0 and math.isfinite(self.uct_exploration_c),
              f"uct_exploration_c must be a finite positive real, got {self.uct_exploration_c}")
        check(self.pw_coefficient > 0 and math.isfinite(self.pw_coefficient),
              f"pw_coefficient must be positive, got {self.pw_coefficient}")
        check(0.0 <= self.pw_exponent <= 1.0, f"pw_exponent must lie in [0, 1], got {self.pw_exponent}")
        check(self.kernel_bandwidth > 0 and math.isfinite(self.kernel_bandwidth),
              f"kernel_bandwidth must be positive, got {self.kernel_bandwidth}")
        check(0.0 < self.discount_factor <= 1.0,
              f"discount_factor must lie in (0, 1], got {self.discount_factor}")
        check(isinstance(self.planning_horizon, int) and self.planning_horizon >= 1,
              f"planning_horizon must be a positive integer, got {self.planning_horizon}")
        check(isinstance(self.iteration_budget, int) and self.iteration_budget >= 1,
              f"iteration_budget must be a positive integer, got {self.iteration_budget}")
        check(isinstance(self.initial_action_count, int) and self.initial_action_count >= 1,
              f"initial_action_count must be a positive integer, got {self.initial_action_count}")
        check(0.0 <= self.similarity_floor <= 1.0,
              f"similarity_floor must lie in [0, 1], got {self.similarity_floor}")
        check(isinstance(self.rng_seed, int) and 0 <= self.rng_seed <= SEED_MASK,
              f"rng_seed must be a 64-bit unsigned integer, got {self.rng_seed}")
        check(self.leaf_visit_weight in LEAF_VISIT_WEIGHTS,
              f"leaf_visit_weight must be one of {LEAF_VISIT_WEIGHTS}, got {self.leaf_visit_weight!r}")

    def with_(self, **changes) -> SearchConfig:
        return replace(self, **changes)
