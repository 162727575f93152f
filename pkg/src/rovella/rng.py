"""Deterministic random streams: splitmix64-seeded xoshiro256**.

Every stochastic task in the package draws from its own stream, derived
from (master seed, task index). The four xoshiro256** state words are
produced by splitmix64 run as a counter generator, so streams for
different task indices never share state. Parallel schedules therefore
cannot change any result: task k sees the same stream no matter which
worker runs it.

A numba-compatible mirror of the generator lives in `kernels`; the two
implementations are checked against each other in the test suite.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# doubles are ((u64 >> 11) + 0.5) * 2^-53, strictly inside (0, 1)
_INV_2_53 = 2.0 ** -53


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def stream_state(master_seed: int, task_index: int) -> np.ndarray:
    """Four xoshiro256** state words for stream (master_seed, task_index).

    splitmix64 is used as a counter generator: word j of task k is
    mix(master + (4k + j + 1) * golden).
    """
    master_seed &= _MASK
    base = (4 * task_index) & _MASK
    words = [
        _mix64((master_seed + ((base + j + 1) * _GOLDEN & _MASK)) & _MASK)
        for j in range(4)
    ]
    return np.array(words, dtype=np.uint64)


def derive_seed(master_seed: int, tag: int) -> int:
    """Independent child seed for a named sub-experiment.

    Keeps stream spaces of different ensembles disjoint: streams are
    (seed, task) pairs, so two ensembles sharing a master seed must not
    both start at task 0.
    """
    return _mix64((master_seed & _MASK) ^ _mix64((0xA5A5A5A5A5A5A5A5 + tag) & _MASK))


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Stream:
    """Sequential xoshiro256** stream (pure-python reference path).

    Bulk draws for hot loops happen inside numba kernels using the same
    update; this class serves corpus generation, seeding of kernel state
    arrays, and cross-checks.
    """

    def __init__(self, master_seed: int, task_index: int = 0):
        self.state = [int(w) for w in stream_state(master_seed, task_index)]

    def next_u64(self) -> int:
        s = self.state
        result = (_rotl(s[1] * 5 & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self) -> float:
        """Uniform double strictly inside (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * _INV_2_53

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def integer(self, n: int) -> int:
        """Integer in [0, n). Modulo bias is < n / 2^64, irrelevant here."""
        return self.next_u64() % n
