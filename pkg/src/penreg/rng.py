"""Portable seeded randomness for splits and folds.

Everything random in this package goes through SplitMix64 (Steele, Lea &
Flood 2014) so that a split can be reproduced bit-for-bit from its seed in
any language with 64-bit unsigned arithmetic:

    state <- state + 0x9E3779B97F4A7C15            (mod 2**64)
    z <- state
    z <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9      (mod 2**64)
    z <- (z ^ (z >> 27)) * 0x94D049BB133111EB      (mod 2**64)
    output z ^ (z >> 31)

Bounded integers in [0, m) use rejection sampling: draw x until
x < 2**64 - (2**64 mod m), return x mod m. Permutations are the
Durstenfeld form of Fisher-Yates, swapping a[i] with a[j], j drawn from
[0, i] for i = n-1 down to 1, starting from the identity.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 output finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def below(self, m: int) -> int:
        """Uniform integer in [0, m) without modulo bias."""
        if m <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % m)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % m

    def permutation(self, n: int) -> np.ndarray:
        a = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            a[i], a[j] = a[j], a[i]
        return np.asarray(a, dtype=np.int64)


def derive_seed(seed: int, stream: int) -> int:
    """Child seed for sub-stream ``stream`` of ``seed``.

    Pure function of its arguments: mix64(seed + (stream + 1) * GOLDEN).
    Used to pre-generate per-iteration seeds before any work is dispatched.
    """
    return mix64((int(seed) + (int(stream) + 1) * GOLDEN) & MASK64)
