"""Sampling kernels and the deterministic random stream.

Randomness comes from a counter-based SplitMix64 stream: draw ``c`` of a
stream with key ``k`` is ``mix64(k + (c + 1) * 0x9E3779B97F4A7C15)``.
Any position can be computed directly, so work can be split across
workers by counter range without changing a single draw.

Stream splitting rule: game round ``r`` owns positions ``4r .. 4r+3``
(challenge pair, outcome, survival, spare). Independent consumers
(the game, tomography, the adversary) get separate keys from
:func:`stream_key`.

The compiled extension ``_kernels`` is used when it is importable;
otherwise, or when ``MDIMEM_KERNELS=python`` is set, the numpy version
``_kernels_py`` is used. ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels_py

_impl = _kernels_py
BACKEND = "python"
if os.environ.get("MDIMEM_KERNELS", "").lower() != "python":
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on build
        pass

MASK64 = (1 << 64) - 1
DRAWS_PER_ROUND = 4

STREAM_GAME = 1
STREAM_TOMOGRAPHY = 2
STREAM_ADVERSARY = 3
STREAM_BOOTSTRAP = 4


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int) -> int:
    """Key for an independent stream derived from a 64-bit seed."""
    return mix64(mix64(seed & MASK64) ^ mix64(0xD1B54A32D192ED03 * (stream + 1)))


def uniforms(key: int, start: int, count: int) -> np.ndarray:
    return _impl.uniforms(key, start, count)


def raw64(key: int, counters) -> np.ndarray:
    return _impl.raw64(key, counters)


def count_below(key: int, start: int, count: int, p: float) -> int:
    return int(_impl.count_below(key, start, count, float(p)))


def shard_bounds(n: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(int(workers), n))
    edges = [n * i // workers for i in range(workers + 1)]
    return [(edges[i], edges[i + 1]) for i in range(workers)]


def play_rounds(key: int, n: int, cdf, keep_threshold: float = 1.0,
                workers: int = 1, impl=None):
    """Tally ``n`` game rounds, optionally split over threads.

    Shards are contiguous round ranges; merging is entrywise addition, so
    the result does not depend on ``workers``.
    """
    impl = impl or _impl
    cdf = np.ascontiguousarray(cdf, dtype=np.float64)
    shards = shard_bounds(n, workers)
    if len(shards) == 1:
        counts, kept = impl.play_rounds(key, 0, n, cdf, float(keep_threshold))
        return np.asarray(counts, dtype=np.int64), int(kept)
    with ThreadPoolExecutor(max_workers=len(shards)) as pool:
        parts = list(pool.map(lambda s: impl.play_rounds(key, s[0], s[1], cdf, float(keep_threshold)),
                              shards))
    counts = sum(np.asarray(c, dtype=np.int64) for c, _ in parts)
    return counts, int(sum(k for _, k in parts))
