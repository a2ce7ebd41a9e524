"""Deterministic 64-bit RNG for reproducible model training.

splitmix64 is used because it is trivially portable: pure 64-bit integer
arithmetic, no platform- or thread-dependent state. Model files name the
generator so a port in another language can reproduce training byte-exactly.
"""

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """splitmix64 stream (Steele, Lea & Flood mixing constants)."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        """Uniform draw in [0, n). Plain modulo: bias is irrelevant here and
        the reduction must stay trivially portable."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def shuffled_prefix(self, n: int, k: int) -> list[int]:
        """First k elements of a Fisher-Yates shuffle of range(n)."""
        pool = list(range(n))
        for j in range(k):
            r = j + self.next_below(n - j)
            pool[j], pool[r] = pool[r], pool[j]
        return pool[:k]


def derive_seeds(seed: int, count: int) -> list[int]:
    """Per-stream seeds: the first `count` outputs of splitmix64(seed).

    Seeding sub-streams with mixed outputs (rather than seed+i) keeps their
    state sequences far apart, so streams never overlap in practice.
    """
    master = SplitMix64(seed)
    return [master.next_u64() for _ in range(count)]
