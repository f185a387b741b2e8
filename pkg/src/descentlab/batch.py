"""Vectorized batch simulation of the jump processes.

Runs many replicates in lockstep with numpy uint64 arithmetic and exact
per-(stage, value) integer thresholds, drawing exactly the same pseudo-random
numbers as the scalar simulator: replicate r uses the counter-based stream
derived from (master_seed, r), two draws per stage.  ``batch_finals`` is
therefore interchangeable with collecting ``simulate(...).final`` over the
same replicate indices, at a small fraction of the cost.

Thresholds are ceil(num * 2**64 / den), i.e. the exact cross-multiplication
test ``u * den < num * 2**64``; they are stored as t-1 with a flag for t = 0,
so probability-one and probability-zero branches stay exact in uint64.
"""

from __future__ import annotations

import numpy as np

from .errors import FamilyError
from .processes import (
    ProcessKind,
    _increment_numerators,
    _type_thresholds,
    parse_kind,
)
from .rng import TWO64, mix64

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

_U = np.uint64
_C30, _C27, _C31 = _U(30), _U(27), _U(31)
_M1 = _U(0xBF58476D1CE4E5B9)
_M2 = _U(0x94D049BB133111EB)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _C30)) * _M1
    z = (z ^ (z >> _C27)) * _M2
    return z ^ (z >> _C31)


def _stream_keys(master_seed: int, start: int, count: int) -> np.ndarray:
    idx = np.arange(start, start + count, dtype=np.uint64)
    base = _U(mix64(master_seed))
    return _mix64_vec(base ^ _mix64_vec(idx + _U(_GOLDEN)))


def _ceil_threshold(num: int, den: int) -> int:
    return -(-num * TWO64 // den)


class _GateTable:
    """``u >= ceil(num/den * 2**64)`` tests gathered by source value."""

    def __init__(self, thresholds: list[int]):
        # store t-1 (uint64) plus a zero flag so t in {0 .. 2**64} is exact
        self.minus_one = np.array(
            [(t - 1) & _MASK for t in thresholds], dtype=np.uint64
        )
        self.is_zero = np.array([t == 0 for t in thresholds], dtype=bool)

    def ge(self, u: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return self.is_zero[idx] | (u > self.minus_one[idx])


def _value_gates(kind: ProcessKind, m: int, two: bool) -> tuple[_GateTable, ...]:
    """Per-source-value gates for the increment draw at stage m."""
    hi = m - 2 if two else m - 1  # source stage
    firsts, seconds = [], []
    for src in range(hi + 1):
        cums, den = _increment_numerators(kind, m, two, src)
        if not cums:
            firsts.append(TWO64)  # never fires; increment handled outside
            seconds.append(TWO64)
            continue
        firsts.append(_ceil_threshold(cums[0], den))
        if len(cums) > 2:
            seconds.append(_ceil_threshold(cums[1], den))
        else:
            seconds.append(TWO64)
    return _GateTable(firsts), _GateTable(seconds)


def batch_finals(kind: str | ProcessKind, n: int, replicates: int,
                 master_seed: int, start_index: int = 0) -> dict[int, int]:
    """Counts of final values over replicate streams start..start+replicates-1.

    Identical to running the scalar simulator per replicate; chunked calls
    over disjoint index ranges merge by adding counts.
    """
    kind = parse_kind(kind)
    if n < kind.n_min:
        raise FamilyError(f"{kind.value}: n={n} below minimum {kind.n_min}")
    if replicates <= 0:
        return {}

    keys = _stream_keys(master_seed, start_index, replicates)
    if kind in (ProcessKind.DERANGEMENT, ProcessKind.EXCEDANCE):
        first = 3
        prev = np.zeros(replicates, dtype=np.int64)
        last = np.ones(replicates, dtype=np.int64)
    else:
        first = 2
        prev = np.zeros(replicates, dtype=np.int64)
        last = np.zeros(replicates, dtype=np.int64)

    type_ts = _type_thresholds(kind, n)
    counter = 0
    for idx, m in enumerate(range(first, n + 1)):
        u1 = _mix64_vec(keys + _U((counter * _GOLDEN) & _MASK))
        counter += 1
        u2 = _mix64_vec(keys + _U((counter * _GOLDEN) & _MASK))
        counter += 1

        t = type_ts[idx]  # < 2**64 since no family puts full mass on two-jumps
        two = u1 < _U(t) if t > 0 else np.zeros(replicates, dtype=bool)

        if kind is ProcessKind.FIBONACCI:
            inc_two = np.ones(replicates, dtype=np.int64)
            inc_one = np.zeros(replicates, dtype=np.int64)
        else:
            g1_two, g2_two = _value_gates(kind, m, True)
            g1_one, _ = _value_gates(kind, m, False)
            if kind is ProcessKind.EXCEDANCE:
                inc_two = np.ones(replicates, dtype=np.int64)
            else:
                inc_two = g1_two.ge(u2, prev).astype(np.int64)
                if kind is ProcessKind.INVOLUTION:
                    inc_two += g2_two.ge(u2, prev)
                else:  # derangement two-jumps add 1 or 2
                    inc_two += 1
            inc_one = g1_one.ge(u2, last).astype(np.int64)

        new = np.where(two, prev + inc_two, last + inc_one)
        prev, last = last, new

    values, counts = np.unique(last, return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}
