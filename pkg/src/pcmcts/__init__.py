"""Parallel continuous-action MCTS with progressive widening and kernel similarity sharing."""
from pcmcts.config import SearchConfig
from pcmcts.core import SearchResult, TreeNode, run_search
from pcmcts.parallel import Strategy, StrategyKind, root_parallel_search
from pcmcts.rng import StreamKey, derive_seed, derive_stream

__all__ = [
    "SearchConfig", "SearchResult", "TreeNode", "run_search", "Strategy", "StrategyKind",
    "root_parallel_search", "StreamKey", "derive_seed", "derive_stream",
]
__version__ = "0.1.0"
