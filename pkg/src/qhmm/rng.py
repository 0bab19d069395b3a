"""Seeded random-number plumbing for reproducible sampling.

All stochastic code in this package draws from a Philox counter-based
generator keyed directly by a 64-bit seed, so results are deterministic
across platforms and independent of execution order. Per-trajectory seeds
are derived from a master seed with the SplitMix64 finalizer, which is the
fixed 64-bit mixing function recorded in run metadata.
"""

from __future__ import annotations

import numpy as np

GENERATOR_ID = "philox4x64(key=splitmix64(master_seed, trajectory_index))"

MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def philox_generator(seed: int) -> np.random.Generator:
    """Generator over a Philox bit stream keyed by the 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & MASK64))


def derive_trajectory_seed(master_seed: int, index: int) -> int:
    """SplitMix64 output for stream position index+1 past the master seed.

    Stable, documented mixing: z = master + (index+1) * golden gamma, then
    the standard SplitMix64 finalizer. Distinct indices give statistically
    independent Philox keys.
    """
    if index < 0:
        raise ValueError("trajectory index must be nonnegative")
    z = (master_seed + (index + 1) * _GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64
