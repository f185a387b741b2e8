"""Binary jump words, the discard reduction, and random compositions.

A run of a two-step jump process is a word over {1, 2} (1 = one-jump,
2 = two-jump) whose first letter is always 1.  The discard reduction turns
the word into an integer composition: scanning from the right, every
surviving 2 absorbs the letter immediately to its left, so each surviving
letter accounts for exactly as many positions as its value and the parts sum
to the word length.  The probability of a composition then factors over its
parts: the two-jump probability at each position ending a 2-part, one minus
it at each position ending a 1-part; the probabilities of discarded stages
marginalize out exactly.

The order-s generalization samples jump sizes 1..s per stage; a surviving
letter j absorbs the j-1 letters to its left.  Stages too early for a jump of
some size renormalize the rule over the feasible sizes (stage 1 is always a
one-jump).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .errors import RuleError
from .families import Family, counting_sequence, parse_family
from .rng import TWO64, Stream

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class JumpWord:
    """Letters over {1..s}, first letter 1."""

    letters: tuple[int, ...]

    def __post_init__(self):
        if not self.letters:
            raise ValueError("empty jump word")
        if self.letters[0] != 1:
            raise ValueError("jump word must start with a one-jump")
        if any(c < 1 for c in self.letters):
            raise ValueError("jump word letters must be positive")

    def __len__(self) -> int:
        return len(self.letters)


@dataclass(frozen=True)
class Composition:
    """Ordered parts in {1..s} with live position bookkeeping."""

    parts: tuple[int, ...]
    s: int = 2

    def __post_init__(self):
        if any(not 1 <= p <= self.s for p in self.parts):
            raise ValueError(f"parts must lie in 1..{self.s}")

    @property
    def total(self) -> int:
        return sum(self.parts)

    def positions(self) -> tuple[int, ...]:
        """Prefix sums: the position at which each part ends."""
        out, acc = [], 0
        for p in self.parts:
            acc += p
            out.append(acc)
        return tuple(out)

    def position_pairs(self) -> tuple[tuple[int, int], ...]:
        """(ending position, part size) for each part."""
        return tuple(zip(self.positions(), self.parts))


def discard_map(word: JumpWord | Sequence[int]) -> Composition:
    """Reduce a jump word to its composition.

    Right-to-left scan: each not-yet-discarded letter j > 1 survives and
    discards the j-1 nearest surviving letters to its left.  Surviving
    letters, read left to right, are the parts; their sum is the word length.
    """
    if not isinstance(word, JumpWord):
        word = JumpWord(tuple(word))
    letters = word.letters
    keep = [True] * len(letters)
    p = len(letters) - 1
    while p >= 0:
        c = letters[p]
        if c > 1:
            lo = p - (c - 1)
            if lo < 0:
                raise ValueError(
                    f"malformed word: jump of size {c} at position {p + 1} "
                    "reaches below the first position"
                )
            for j in range(lo, p):
                keep[j] = False
            p = lo - 1
        else:
            p -= 1
    parts = tuple(c for c, k in zip(letters, keep) if k)
    s = max(2, max(letters))
    return Composition(parts, s)


@dataclass(frozen=True)
class JumpProbabilityRule:
    """Per-stage jump-size distribution.

    For the default order 2, ``fn(i)`` returns the two-jump probability at
    stage i as an exact rational.  For order s > 2, ``fn(i)`` returns the full
    vector (q_1(i), .., q_s(i)) summing to exactly 1.
    """

    fn: Callable[[int], Fraction | Sequence[Fraction]]
    order: int = 2
    name: str = "custom"

    def two_jump(self, i: int) -> Fraction:
        if self.order != 2:
            raise RuleError("two_jump is only defined for order-2 rules")
        return self.vector(i)[1]

    def vector(self, i: int) -> tuple[Fraction, ...]:
        """The stage-i size distribution (q_1, .., q_s)."""
        raw = self.fn(i)
        if isinstance(raw, (Fraction, int)):
            if self.order != 2:
                raise RuleError(
                    f"rule {self.name} returned a scalar but has order {self.order}"
                )
            q = Fraction(raw)
            if not ZERO <= q <= ONE:
                raise RuleError(f"rule {self.name} gave q({i}) = {q} outside [0, 1]")
            return (ONE - q, q)
        vec = tuple(Fraction(v) for v in raw)
        if len(vec) != self.order:
            raise RuleError(
                f"rule {self.name} gave {len(vec)} probabilities at stage {i}, "
                f"expected {self.order}"
            )
        if any(v < 0 for v in vec) or sum(vec) != 1:
            raise RuleError(
                f"rule {self.name} stage-{i} probabilities must be nonnegative "
                "and sum to exactly 1"
            )
        return vec

    def feasible_vector(self, i: int) -> tuple[Fraction, ...]:
        """Stage-i distribution conditioned on jump sizes <= i.

        A jump of size j at stage i starts from the value j stages back, so
        sizes above i are impossible; early stages renormalize over the
        feasible sizes.  Stage 1 is therefore always a one-jump.
        """
        vec = self.vector(i)
        if i >= self.order:
            return vec
        head = vec[:i]
        z = sum(head)
        if z == 0:
            raise RuleError(
                f"rule {self.name} puts no mass on feasible jump sizes at stage {i}"
            )
        return tuple(v / z for v in head) + (ZERO,) * (self.order - i)


def constant_rule(q: Fraction | int) -> JumpProbabilityRule:
    qq = Fraction(q)
    return JumpProbabilityRule(lambda i: qq, name=f"constant({qq})")


def family_rule(family: str | Family) -> JumpProbabilityRule:
    """The family's own two-jump probability at each stage.

    involution: (i-1) i_{i-2} / i_i, derangement and excedance:
    (i-1) d_{i-2} / d_i, fibonacci: f_{i-2} / f_i.
    """
    fam = parse_family(family)
    if fam is Family.EULERIAN:
        raise RuleError("the eulerian family has a first-order recurrence; "
                        "no two-jump rule exists")
    weighted = fam is not Family.FIBONACCI

    def q(i: int) -> Fraction:
        seq = counting_sequence(fam, max(i, fam.n_min))
        w = (i - 1) if weighted else 1
        return Fraction(w * seq[i - 2], seq[i]) if i >= 2 else ZERO

    return JumpProbabilityRule(q, name=f"family({fam.value})")


def _stage_thresholds(vec: Sequence[Fraction]) -> tuple[tuple[int, ...], int]:
    """Cumulative integer thresholds over a common denominator."""
    from math import lcm

    den = lcm(*(v.denominator for v in vec))
    cums, acc = [], 0
    for v in vec:
        acc += v.numerator * (den // v.denominator)
        cums.append(acc)
    return tuple(cums), den


class WordSampler:
    """Precomputed per-stage thresholds for repeated word draws.

    One uniform 64-bit draw decides each stage against exact cumulative
    thresholds by cross-multiplication; per-decision bias is below 2**-64.
    """

    def __init__(self, rule: JumpProbabilityRule, n: int):
        if n < 1:
            raise ValueError("word length must be at least 1")
        self.n = n
        self._stages = [_stage_thresholds(rule.feasible_vector(i)) for i in range(2, n + 1)]

    def sample(self, stream: Stream) -> JumpWord:
        letters = [1]
        for cums, den in self._stages:
            u = stream.next_u64()
            lhs = u * den
            size = len(cums)
            for j, c in enumerate(cums):
                if lhs < c * TWO64:
                    size = j + 1
                    break
            letters.append(size)
        return JumpWord(tuple(letters))


def sample_jump_word(rule: JumpProbabilityRule, n: int, stream: Stream) -> JumpWord:
    """Draw the stage-by-stage jump word of length n."""
    return WordSampler(rule, n).sample(stream)


def sample_composition(rule: JumpProbabilityRule, n: int, stream: Stream) -> Composition:
    """One random composition of n from the coupled jump process."""
    return discard_map(sample_jump_word(rule, n, stream))


def higher_order_sample(rule: JumpProbabilityRule, n: int, stream: Stream) -> Composition:
    """Order-s composition sampling; coincides with sample_composition at s=2."""
    return discard_map(sample_jump_word(rule, n, stream))


def composition_probability(rule: JumpProbabilityRule, comp: Composition) -> Fraction:
    """Exact probability of the composition under the rule.

    Product over parts of the feasible stage distribution evaluated at the
    part's ending position; sums to exactly 1 over all compositions.
    """
    prob = ONE
    for pos, size in comp.position_pairs():
        if pos == 1:
            if size != 1:
                return ZERO
            continue  # the first update is always a one-jump
        vec = rule.feasible_vector(pos)
        prob *= vec[size - 1]
    return prob


def enumerate_compositions(n: int, s: int = 2) -> list[Composition]:
    """All compositions of n with parts in 1..s, in lexicographic order."""
    if n < 1 or s < 1:
        raise ValueError("need n >= 1 and s >= 1")
    out: list[Composition] = []

    def rec(remaining: int, prefix: tuple[int, ...]):
        if remaining == 0:
            out.append(Composition(prefix, s))
            return
        for p in range(1, min(s, remaining) + 1):
            rec(remaining - p, prefix + (p,))

    rec(n, ())
    return out


@dataclass(frozen=True)
class BernoulliSpec:
    """Binary value taking ``a`` with probability ``p`` and ``b`` otherwise."""

    p: Fraction
    a: Fraction
    b: Fraction = field(default=ZERO)

    def __post_init__(self):
        object.__setattr__(self, "p", Fraction(self.p))
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if not ZERO <= self.p <= ONE:
            raise ValueError(f"probability {self.p} outside [0, 1]")

    def mean(self) -> Fraction:
        return self.p * self.a + (1 - self.p) * self.b

    def raw_moment(self, r: int) -> Fraction:
        return self.p * self.a**r + (1 - self.p) * self.b**r


def word_statistic(specs: Sequence[BernoulliSpec], word: JumpWord | Sequence[int]) -> Fraction:
    """Sum of per-part spec values over the discard-mapped composition.

    The part ending at position p contributes specs[p-1].a for a 2-part and
    specs[p-1].b for a 1-part (the spec's success value is tied to the
    two-jump).  Raises IndexError when the spec vector is shorter than the
    word.
    """
    comp = discard_map(word)
    if comp.total > len(specs):
        raise IndexError(
            f"need {comp.total} specs for a word of that length, got {len(specs)}"
        )
    total = ZERO
    for pos, size in comp.position_pairs():
        spec = specs[pos - 1]
        total += spec.a if size == 2 else spec.b
    return total


def binary_sum_moments(specs: Sequence[BernoulliSpec], max_order: int = 4) -> list[Fraction]:
    """Raw moments E[T^r], r = 0..max_order, of T = sum of independent specs."""
    if max_order > 4:
        raise ValueError("moments are supported up to order 4")
    from math import comb

    moments = [ONE] + [ZERO] * max_order  # point mass at zero
    for spec in specs:
        b = [spec.raw_moment(r) for r in range(max_order + 1)]
        moments = [
            sum(comb(r, j) * moments[j] * b[r - j] for j in range(r + 1))
            for r in range(max_order + 1)
        ]
    return moments
