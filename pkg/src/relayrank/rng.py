"""Named, splittable random substreams derived from a single integer seed.

Every consumer of randomness asks for its own substream by name, so adding a
new consumer never perturbs the draws seen by an existing one. Streams are
PCG64 generators seeded through :class:`numpy.random.SeedSequence` with an
explicit spawn key ``(stream_id, *extra)``; a team's row in a simulated race
therefore depends only on ``(seed, team index)`` and not on the field size.
"""

from __future__ import annotations

import numpy as np

STREAMS = {
    "simulation": 0,
    "split": 1,
}

_U53 = float(2**53)


def substream(seed: int, name: str, *keys: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    try:
        stream_id = STREAMS[name]
    except KeyError:
        raise ValueError(f"unknown random stream {name!r}") from None
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(stream_id, *map(int, keys)))
    return np.random.Generator(np.random.PCG64(ss))


def open_uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform draws on the open interval (0, 1) with 53 bits of resolution.

    Never returns 0 or 1, so the values can go straight into a quantile
    function.
    """
    k = rng.integers(0, 2**53, size=size, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) / _U53
