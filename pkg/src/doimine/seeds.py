"""Named random substreams derived from one global seed.

Every stochastic stage (nmf, spinglass, baseline, rewire, synth) pulls its
generator from here so that stages stay reproducible in isolation: rerunning
a single stage with the same global seed yields the same stream regardless
of what ran before it.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _name_key(name: str) -> int:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Generator for stream `name` (+ replicate `index`) under `seed`."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_name_key(name), index))
    return np.random.default_rng(ss)


def substream_seed(seed: int, name: str, index: int = 0) -> int:
    """Stable integer seed for stream `name`, for APIs that take raw seeds."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_name_key(name), index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
