"""Pinned, platform-independent random number generation and hashing.

Reproducibility across machines is part of the package contract, so the
generators are spelled out here instead of delegating to library defaults:

* ``fnv1a64`` -- FNV-1a 64-bit hash, used to order dataset split groups.
* ``splitmix64`` -- seed expander (one u64 in, stream of u64 out).
* ``Xoshiro256StarStar`` -- the forest trainer's generator; each tree is
  seeded with ``seed XOR tree_index`` expanded through splitmix64.

All arithmetic is modulo 2**64.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = FNV64_OFFSET
    for b in data:
        h = ((h ^ b) * FNV64_PRIME) & _MASK64
    return h


def splitmix64_stream(seed: int):
    """Infinite stream of u64 values from the splitmix64 sequence."""
    x = seed & _MASK64
    while True:
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield (z ^ (z >> 31)) & _MASK64


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** with splitmix64 state initialisation."""

    def __init__(self, seed: int):
        sm = splitmix64_stream(seed)
        self._s = [next(sm) for _ in range(4)]

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) via modulo reduction (pinned, biased by
        at most n/2**64, negligible for raster-sized n)."""
        if n <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, k: int) -> list[int]:
        """First k entries of a Fisher-Yates shuffle of range(n), order kept."""
        if k > n:
            raise ValueError(f"cannot sample {k} from {n}")
        pool = list(range(n))
        picked = []
        top = n - 1
        for _ in range(k):
            j = self.below(top + 1)
            pool[j], pool[top] = pool[top], pool[j]
            picked.append(pool[top])
            top -= 1
        return picked
