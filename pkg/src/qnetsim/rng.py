"""Seeded random streams.

All randomness flows through ``numpy.random.Generator`` objects built from a
``SeedSequence``. Independent trials get their own child streams via
``spawn`` so results do not depend on execution order.
"""
from __future__ import annotations

import os

import numpy as np

SEED_ENV_VAR = "QNETSIM_SEED"
SEED_MAX = 2**64 - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        from .errors import ConfigInvalid
        raise ConfigInvalid(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def resolve_seed(seed=None) -> int:
    """Return ``seed`` if given, else the environment override, else 0."""
    if seed is not None:
        return check_seed(seed)
    env = os.environ.get(SEED_ENV_VAR)
    if env not in (None, ""):
        return check_seed(env)
    return 0


def make_rng(seed=0) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(check_seed(seed)))


def spawn(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Split ``rng`` into ``n`` independent child generators."""
    return list(rng.spawn(n))
