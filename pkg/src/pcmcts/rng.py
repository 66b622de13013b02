"""Deterministic seed splitting and named random streams.

Every consumer of randomness (tree expansion, each rollout worker, the
episode driver, ...) owns a stream identified by a :class:`StreamKey`.
A key is a root seed plus an ordered path of ``(label, index)`` pairs.

Construction (stable across releases, reproducible in any language):

1. Serialise the key as ASCII text ``"<seed>"`` followed by
   ``"/<label>:<index>"`` for each path element, e.g. ``"42/tree:0"``.
2. Hash the text with SHA-256.
3. The first 16 digest bytes, read as a little-endian unsigned integer,
   seed an MT19937 generator through ``init_by_array`` with the 32-bit
   little-endian words of that integer (this is exactly what CPython's
   ``random.Random(int)`` does).
4. Uniform reals are MT19937 ``genrand_res53`` values in [0, 1).

:func:`derive_seed` uses the first 8 digest bytes as a 64-bit seed for
nested keys. Reference draws are frozen in ``tests/golden/rng_vectors.json``.
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class StreamKey:
    root_seed: int
    path: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if not 0 <= self.root_seed <= SEED_MASK:
            raise ValueError(f"root seed must be a 64-bit unsigned integer, got {self.root_seed}")
        for label, index in self.path:
            if ":" in label or "/" in label:
                raise ValueError(f"stream label may not contain ':' or '/': {label!r}")
            if index < 0:
                raise ValueError(f"stream index must be non-negative, got {index}")

    def child(self, label: str, index: int = 0) -> StreamKey:
        return StreamKey(self.root_seed, self.path + ((label, index),))

    def material(self) -> bytes:
        text = str(self.root_seed) + "".join(f"/{label}:{index}" for label, index in self.path)
        return text.encode("ascii")

    def digest(self) -> bytes:
        return hashlib.sha256(self.material()).digest()


def derive_stream(key: StreamKey) -> random.Random:
    """Return a fresh generator for ``key``; a pure function of the key."""
    return random.Random(int.from_bytes(key.digest()[:16], "little"))


def derive_seed(key: StreamKey) -> int:
    """64-bit seed derived from ``key``, for building nested keys."""
    return int.from_bytes(key.digest()[:8], "little")


def stream(seed: int, *path: tuple[str, int]) -> random.Random:
    return derive_stream(StreamKey(seed, tuple(path)))
