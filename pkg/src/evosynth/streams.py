"""Counter-based random streams for order-independent reproducibility.

Every stochastic decision in the simulator draws from a Philox generator
whose 128-bit key is derived from a root seed plus a tuple of integer
coordinates (domain, generation, network id, layer, cluster, ...).  Streams
for distinct coordinates are independent, so offspring can be synthesized
and trained in any order, or concurrently, without changing a single draw.
"""

from __future__ import annotations

import numpy as np

# Domain tags keep streams for unrelated purposes disjoint even when the
# remaining coordinates collide.
DOMAIN_SYNTH = 1
DOMAIN_TRAIN = 2
DOMAIN_SELECT = 3
DOMAIN_INIT = 4
DOMAIN_GRADCHECK = 5
DOMAIN_DATA = 6

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    # Standard splitmix64 finalizer; diffuses low-entropy coordinate tuples
    # into well-separated 64-bit keys.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def fold_key(*parts: int) -> int:
    """Fold a tuple of integers into a single 64-bit key, order-sensitively."""
    acc = 0x243F6A8885A308D3  # arbitrary nonzero start
    for p in parts:
        acc = _splitmix64(acc ^ (int(p) & _MASK64))
    return acc


def stream(seed_root: int, domain: int, *parts: int) -> np.random.Generator:
    """Return the Philox stream keyed by (seed_root, domain, *parts)."""
    key = np.array([int(seed_root) & _MASK64, fold_key(domain, *parts)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
