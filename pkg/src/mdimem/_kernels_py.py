"""Pure numpy implementation of the sampling kernels.

Used when the compiled ``_kernels`` extension is unavailable. Results are
bit-identical to the compiled version.
"""

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)
_S11, _S60, _S62 = np.uint64(11), np.uint64(60), np.uint64(62)
_THREE = np.uint64(3)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

BLOCK = 1 << 16
DRAWS_PER_ROUND = 4


def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def raw64(key, counters):
    """SplitMix64 output at positions ``counters`` of the stream ``key``."""
    c = np.asarray(counters, dtype=np.uint64)
    return _mix(np.uint64(key) + (c + np.uint64(1)) * GAMMA)


def _to_unit(h):
    return (h >> _S11).astype(np.float64) * _INV53


def uniforms(key, start, count):
    return _to_unit(raw64(key, np.arange(start, start + count, dtype=np.uint64)))


def play_rounds(key, start, stop, cdf, keep_threshold):
    """Tally game rounds ``start <= r < stop``.

    ``cdf`` is a (16, 2) float64 array of cumulative outcome probabilities
    per challenge cell ``4*x + y``. Returns ``(counts, kept)`` where
    ``counts`` has shape (16, 3) with columns (+, -, 0).
    """
    cdf = np.ascontiguousarray(cdf, dtype=np.float64)
    counts = np.zeros(48, dtype=np.int64)
    kept = 0
    for lo in range(start, stop, BLOCK):
        hi = min(lo + BLOCK, stop)
        base = np.arange(lo, hi, dtype=np.uint64) * np.uint64(DRAWS_PER_ROUND)
        hx = raw64(key, base)
        cell = ((hx >> _S62) * np.uint64(4) + ((hx >> _S60) & _THREE)).astype(np.intp)
        u = _to_unit(raw64(key, base + np.uint64(1)))
        b = (u >= cdf[cell, 0]).astype(np.intp) + (u >= cdf[cell, 1])
        if keep_threshold < 1.0:
            mask = _to_unit(raw64(key, base + np.uint64(2))) < keep_threshold
            cell, b = cell[mask], b[mask]
        kept += cell.size
        counts += np.bincount(cell * 3 + b, minlength=48)
    return counts.reshape(16, 3), kept


def count_below(key, start, count, p):
    """Number of stream positions in ``[start, start + count)`` with uniform < p."""
    total = 0
    for lo in range(start, start + count, BLOCK):
        hi = min(lo + BLOCK, start + count)
        total += int(np.count_nonzero(uniforms(key, lo, hi - lo) < p))
    return total
