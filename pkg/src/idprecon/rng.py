"""Counter-based uniform streams.

Every mechanism call gets its own stream keyed by ``(seed, call_index)``,
so an answer is reproducible from those two integers alone and does not
depend on how many other calls happened in between or on which thread.
The scalar and vectorised paths produce identical values.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _mix(x: int) -> int:
    x ^= x >> 30
    x = (x * _M1) & _MASK
    x ^= x >> 27
    x = (x * _M2) & _MASK
    return x ^ (x >> 31)


def _mix_array(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(_M1)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


def random_bits(seed: int, index: int) -> int:
    """64 pseudo-random bits for position ``index`` of stream ``seed``."""
    key = _mix(seed & _MASK)
    return _mix(key ^ _mix(((index + 1) * _GOLDEN) & _MASK))


def uniform(seed: int, index: int) -> float:
    """Uniform on the open interval (0, 1), an odd multiple of 2**-53."""
    k = random_bits(seed, index) >> 12
    return (2 * k + 1) * 2.0**-53


def uniforms(seed: int, start: int, size: int) -> np.ndarray:
    """Vectorised ``uniform(seed, i)`` for ``i`` in ``range(start, start + size)``."""
    with np.errstate(over="ignore"):
        idx = np.arange(start + 1, start + 1 + size, dtype=np.uint64)
        key = np.uint64(_mix(seed & _MASK))
        z = _mix_array(key ^ _mix_array(idx * np.uint64(_GOLDEN)))
    k = (z >> np.uint64(12)).astype(np.float64)
    return (2.0 * k + 1.0) * 2.0**-53


def derive_seed(seed: int, *labels: int) -> int:
    """Independent sub-seed for a labelled sub-experiment."""
    s = seed & _MASK
    for lab in labels:
        s = _mix(s ^ _mix(((lab + 1) * _GOLDEN) & _MASK))
    return s


class Stream:
    """Sequential view of the counter-based stream ``seed`` starting at ``position``."""

    def __init__(self, seed: int, position: int = 0):
        self.seed = int(seed)
        self.position = int(position)

    def uniform(self) -> float:
        u = uniform(self.seed, self.position)
        self.position += 1
        return u

    def uniforms(self, size: int) -> np.ndarray:
        out = uniforms(self.seed, self.position, size)
        self.position += size
        return out
