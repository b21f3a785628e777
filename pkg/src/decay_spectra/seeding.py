"""Deterministic seed derivation for parallel Monte Carlo fan-out.

Per-trial seeds come from a splitmix64-style hash of (master_seed, index) so a
trial's stream depends only on its index, never on worker scheduling.  The map
index -> seed is injective for a fixed master seed (the mix is a bijection on
64-bit words and the pre-mix states are distinct).
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed for the index-th independent stream under master_seed."""
    if index < 0:
        raise ValueError("index must be non-negative")
    state = (int(master_seed) + (index + 1) * _GOLDEN) & _MASK
    return _mix(state)
