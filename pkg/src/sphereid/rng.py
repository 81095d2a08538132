"""Deterministic named random streams.

All randomness in the toolkit flows through seeded_rng. A stream is
identified by (seed, name); the same pair always yields the same
sequence, and distinct names yield statistically independent sequences.
Consumers own their streams outright: adding a new consumer with a new
name never perturbs an existing stream.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def seeded_rng(seed: int, stream: str) -> np.random.Generator:
    """Return a PCG64 generator for the (seed, stream) pair."""
    digest = hashlib.sha256(stream.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    ss = np.random.SeedSequence([seed & _MASK64, *words])
    return np.random.default_rng(ss)


def rng_state(rng: np.random.Generator) -> dict:
    """JSON-serializable snapshot of a generator's position."""
    return rng.bit_generator.state


def restore_rng(state: dict) -> np.random.Generator:
    rng = np.random.default_rng()
    rng.bit_generator.state = state
    return rng
