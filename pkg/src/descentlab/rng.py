"""Counter-based pseudo-random streams for reproducible parallel sampling.

A stream is a pure function of (master_seed, stream_index, counter): output j
is the SplitMix64 finalizer applied to ``key + j * GOLDEN``.  Replicates of a
Monte Carlo run each own an independent stream derived from the master seed
and the replicate index, so chunked or parallel execution draws exactly the
same numbers as a serial run.
"""

from __future__ import annotations

from fractions import Fraction

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

TWO64 = 1 << 64


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a 64-bit bijective hash."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stream_key(master_seed: int, stream_index: int = 0) -> int:
    return mix64(mix64(master_seed) ^ mix64(stream_index + _GOLDEN))


class Stream:
    """One reproducible 64-bit output sequence.

    ``Stream(seed, index)`` and any other stream with a different index are
    independent for practical purposes; equal arguments give equal sequences.
    """

    __slots__ = ("_key", "_counter")

    def __init__(self, master_seed: int, stream_index: int = 0):
        self._key = stream_key(master_seed, stream_index)
        self._counter = 0

    def next_u64(self) -> int:
        out = mix64(self._key + self._counter * _GOLDEN)
        self._counter += 1
        return out

    def bernoulli(self, p: Fraction) -> bool:
        """True with probability p, bias below 2**-64.

        Compares one uniform draw against p by cross-multiplication, so no
        rational division happens per decision; exact at p = 0 and p = 1.
        """
        u = self.next_u64()
        return u * p.denominator < p.numerator * TWO64
