"""Deterministic rng derivation: one master seed, independent per-trial streams."""

from __future__ import annotations

import numpy as np


def master_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for (seed, key); replay-stable and order-free."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))
