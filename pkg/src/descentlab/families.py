"""Counting sequences and descent-distribution triangles, exactly.

Five statistic families are supported:

* ``eulerian``    -- descents over all permutations (row sums n!),
* ``involution``  -- descents over involutions (row sums i_n with
                     i_n = i_{n-1} + (n-1) i_{n-2}),
* ``derangement`` -- descents over derangements (row sums d_n with
                     d_n = (n-1)(d_{n-1} + d_{n-2})),
* ``excedance``   -- excedances over derangements (row sums d_n),
* ``fibonacci``   -- descents over permutations with |pi(i) - i| <= 1
                     (row sums f_n with f_n = f_{n-1} + f_{n-2}, f_0 = f_1 = 1).

All triangle entries are arbitrary-precision integers computed bottom-up from
the family's row recurrence; rows convert to probability mass functions with
exact rational weights.  Everything here is immutable after construction and
safe to share across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import FamilyError


class Family(enum.Enum):
    EULERIAN = "eulerian"
    INVOLUTION = "involution"
    DERANGEMENT = "derangement"
    EXCEDANCE = "excedance"
    FIBONACCI = "fibonacci"

    @property
    def n_min(self) -> int:
        return 2 if self in (Family.DERANGEMENT, Family.EXCEDANCE) else 1

    @property
    def k_min(self) -> int:
        return 1 if self in (Family.DERANGEMENT, Family.EXCEDANCE) else 0


def parse_family(tag: str | Family) -> Family:
    if isinstance(tag, Family):
        return tag
    try:
        return Family(tag)
    except ValueError:
        raise FamilyError(f"unknown family tag {tag!r}") from None


@lru_cache(maxsize=None)
def _counts(family: Family, n_max: int) -> tuple[int, ...]:
    if family is Family.EULERIAN:
        seq = [1]
        for n in range(1, n_max + 1):
            seq.append(seq[-1] * n)
    elif family is Family.INVOLUTION:
        seq = [1, 1]
        for n in range(2, n_max + 1):
            seq.append(seq[n - 1] + (n - 1) * seq[n - 2])
    elif family in (Family.DERANGEMENT, Family.EXCEDANCE):
        seq = [1, 0]
        partial = 0  # n! * sum_{i<=n} (-1)^i / i!, integer by induction
        for n in range(2, n_max + 1):
            seq.append((n - 1) * (seq[n - 1] + seq[n - 2]))
        for n in range(n_max + 1):
            partial = n * partial + (-1) ** n
            assert partial == seq[n], "closed form disagrees with recurrence"
    else:  # fibonacci
        seq = [1, 1]
        for n in range(2, n_max + 1):
            seq.append(seq[n - 1] + seq[n - 2])
    return tuple(seq[: n_max + 1])


def counting_sequence(family: str | Family, n_max: int) -> list[int]:
    """Exact class sizes for indices 0..n_max.

    Derangement counts are cross-checked at build time against the closed
    form n! * sum_{i<=n} (-1)^i / i! (accumulated as the integer recurrence
    a_n = n a_{n-1} + (-1)^n, which is that sum's factored form).
    """
    fam = parse_family(family)
    if n_max < fam.n_min:
        raise FamilyError(
            f"n_max={n_max} is below the minimum index {fam.n_min} "
            f"for family {fam.value}"
        )
    return list(_counts(fam, n_max))


@dataclass(frozen=True)
class ExactPmf:
    """Integer-supported pmf: weight(offset + j) = weights[j], exact."""

    offset: int
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if any(w < 0 for w in self.weights):
            raise ValueError("pmf weights must be nonnegative")
        if sum(self.weights) != 1:
            raise ValueError("pmf weights must sum to exactly 1")

    def support(self) -> range:
        return range(self.offset, self.offset + len(self.weights))

    def items(self) -> list[tuple[int, Fraction]]:
        return [(self.offset + j, w) for j, w in enumerate(self.weights)]

    def weight(self, k: int) -> Fraction:
        j = k - self.offset
        if 0 <= j < len(self.weights):
            return self.weights[j]
        return Fraction(0)

    def raw_moment(self, r: int) -> Fraction:
        return sum((Fraction(k) ** r) * w for k, w in self.items())

    def mean(self) -> Fraction:
        return sum(Fraction(k) * w for k, w in self.items())

    def variance(self) -> Fraction:
        m = self.mean()
        return sum((k - m) ** 2 * w for k, w in self.items())

    def central_moment(self, r: int) -> Fraction:
        m = self.mean()
        return sum((k - m) ** r * w for k, w in self.items())


class CountTriangle:
    """Dense rows of exact integers for one family, n = n_min .. n_max.

    Row n holds entries for k = k_min .. k_max(n); indices outside a row are
    implicitly zero.  Derangement and excedance rows keep explicit trailing
    zeros (k runs to n-1) so rows are directly comparable against references.
    """

    def __init__(self, family: Family, n_max: int, rows: dict[int, list[int]]):
        self.family = family
        self.n_max = n_max
        self._rows = rows

    @property
    def n_min(self) -> int:
        return self.family.n_min

    @property
    def k_min(self) -> int:
        return self.family.k_min

    def row(self, n: int) -> list[int]:
        if not self.n_min <= n <= self.n_max:
            raise FamilyError(
                f"row {n} outside triangle range {self.n_min}..{self.n_max} "
                f"for family {self.family.value}"
            )
        return list(self._rows[n])

    def row_sum(self, n: int) -> int:
        return sum(self.row(n))

    def rows(self):
        for n in range(self.n_min, self.n_max + 1):
            yield n, self.row(n)


def _eulerian_rows(n_max: int) -> dict[int, list[int]]:
    rows = {1: [1]}
    for n in range(2, n_max + 1):
        prev = rows[n - 1]
        row = []
        for k in range(n):
            a = (k + 1) * prev[k] if k < len(prev) else 0
            b = (n - k) * prev[k - 1] if 1 <= k <= len(prev) else 0
            row.append(a + b)
        rows[n] = row
    return rows


def _involution_rows(n_max: int) -> dict[int, list[int]]:
    # I_{n,k} for k = 0..n-1; the two-row recurrence divides by n exactly.
    rows = {1: [1]}
    if n_max >= 2:
        rows[2] = [1, 1]
    for n in range(3, n_max + 1):
        r1 = rows[n - 1]  # row n-1, indices 0..n-2
        r2 = rows[n - 2]  # row n-2, indices 0..n-3
        m = n - 2         # recurrence parameter: row n = "n-2 plus two"

        def e1(k):
            return r1[k] if 0 <= k < len(r1) else 0

        def e2(k):
            return r2[k] if 0 <= k < len(r2) else 0

        row = []
        for k in range(n):
            total = (
                (k + 1) * e1(k)
                + (m - k + 2) * e1(k - 1)
                + ((k + 1) ** 2 + m) * e2(k)
                + (2 * k * (m - k + 1) - m + 1) * e2(k - 1)
                + ((m - k + 2) ** 2 + m) * e2(k - 2)
            )
            q, rem = divmod(total, n)
            assert rem == 0, "involution row recurrence must divide exactly"
            row.append(q)
        rows[n] = row
    return rows


def _derangement_rows(n_max: int) -> dict[int, list[int]]:
    # D_{n,k} for k = 1..n-1, stored with trailing zeros; row 1 is empty.
    rows = {1: []}
    if n_max >= 2:
        rows[2] = [1]

    def entry(row, k):
        return row[k - 1] if 1 <= k <= len(row) else 0

    for n in range(3, n_max + 1):
        r1, r2 = rows[n - 1], rows[n - 2]
        rows[n] = [
            (k + 1) * entry(r1, k)
            + (n - k - 1) * entry(r1, k - 1)
            + k * entry(r2, k - 1)
            + (n - k) * entry(r2, k - 2)
            for k in range(1, n)
        ]
    return rows


def _excedance_rows(n_max: int) -> dict[int, list[int]]:
    # Exc_{n,k} = k Exc_{n-1,k} + (n-k) Exc_{n-1,k-1} + (n-1) Exc_{n-2,k-1}
    rows = {1: []}
    if n_max >= 2:
        rows[2] = [1]

    def entry(row, k):
        return row[k - 1] if 1 <= k <= len(row) else 0

    for n in range(3, n_max + 1):
        r1, r2 = rows[n - 1], rows[n - 2]
        rows[n] = [
            k * entry(r1, k)
            + (n - k) * entry(r1, k - 1)
            + (n - 1) * entry(r2, k - 1)
            for k in range(1, n)
        ]
    return rows


def _fibonacci_rows(n_max: int) -> dict[int, list[int]]:
    # row n: binomial(n-k, k) for k = 0..floor(n/2)
    from math import comb

    return {n: [comb(n - k, k) for k in range(n // 2 + 1)] for n in range(1, n_max + 1)}


_ROW_BUILDERS = {
    Family.EULERIAN: _eulerian_rows,
    Family.INVOLUTION: _involution_rows,
    Family.DERANGEMENT: _derangement_rows,
    Family.EXCEDANCE: _excedance_rows,
    Family.FIBONACCI: _fibonacci_rows,
}


def descent_triangle(family: str | Family, n_max: int) -> CountTriangle:
    """Build the family's triangle for rows n_min..n_max from its recurrence."""
    fam = parse_family(family)
    if n_max < fam.n_min:
        raise FamilyError(
            f"n_max={n_max} is below the minimum row {fam.n_min} "
            f"for family {fam.value}"
        )
    rows = _ROW_BUILDERS[fam](n_max)
    rows = {n: rows[n] for n in range(fam.n_min, n_max + 1)}
    return CountTriangle(fam, n_max, rows)


def triangle_row_pmf(triangle: CountTriangle, n: int) -> ExactPmf:
    """Row n of the triangle normalized to an exact pmf over k."""
    row = triangle.row(n)
    total = sum(row)
    if total <= 0:
        raise FamilyError(f"degenerate row n={n}: zero row sum")
    return ExactPmf(triangle.k_min, tuple(Fraction(c, total) for c in row))
