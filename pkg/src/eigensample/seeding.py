"""Deterministic random streams.

Every sampling routine takes an explicit numpy Generator.  Batch drivers
(the CLI, long test loops) derive one independent substream per sample,
keyed by (master seed, sample index), so results do not depend on how the
loop is chunked or parallelized.
"""
from __future__ import annotations

import numpy as np


def master_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for sample `index` under `seed`."""
    if index < 0:
        raise ValueError("sample index must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence((seed, index)))
