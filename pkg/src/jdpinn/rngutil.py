"""Reproducible random streams.

All randomness in the toolkit flows from a single 64-bit seed. Sub-streams
are derived by numpy's SeedSequence spawning keyed on a stable label plus
integer indices, and fed to the counter-based Philox4x64 bit generator, so
serial and parallel consumers of disjoint streams always agree.

Normal variates are produced by the inverse-CDF map (scipy's ndtri rational
approximation) applied to uniforms, one uniform per variate, which keeps
stream positions independent of the values drawn.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# Fixed label -> lane table; labels, not raw ints, so streams cannot collide
# silently when a new consumer is added.
_LANES = {
    "neural-init": 0,
    "grid-split": 1,
    "train-batch": 2,
    "mc-path": 3,
    "sentiment-path": 4,
    "jump-path": 5,
    "test": 6,
}

_U_MIN = 2.0**-53
_U_MAX = np.nextafter(1.0, 0.0)


def generator(seed: int, lane: str, *indices: int) -> np.random.Generator:
    """Philox generator on the sub-stream (seed, lane, *indices)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_LANES[lane], *indices))
    return np.random.Generator(np.random.Philox(ss))


def normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normals via inverse CDF; uniforms clipped away from {0, 1}."""
    u = np.clip(rng.random(shape), _U_MIN, _U_MAX)
    return ndtri(u)


def sub_seed(seed: int, lane: str, *indices: int) -> int:
    """A derived 64-bit seed, for components that take a seed rather than a stream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_LANES[lane], *indices))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
