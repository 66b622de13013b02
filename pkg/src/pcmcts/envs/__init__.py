from pcmcts.envs.base import Environment, EnvironmentSpec, State
from pcmcts.envs.merge import CONSTANTS as MERGE_CONSTANTS, CoopMerge, Vehicle
from pcmcts.envs.narrow import NarrowPassage
from pcmcts.envs.presets import PRESETS, Preset, get_preset
from pcmcts.envs.toy import ToyLinear, ToyParabola, parabola_reward, toy_world_optimal

__all__ = [
    "Environment", "EnvironmentSpec", "State", "MERGE_CONSTANTS", "CoopMerge", "Vehicle",
    "NarrowPassage", "PRESETS", "Preset", "get_preset", "ToyLinear", "ToyParabola",
    "parabola_reward", "toy_world_optimal",
]
