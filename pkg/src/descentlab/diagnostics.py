"""Identity verification, normal-approximation distances, condition scans.

Kolmogorov distances standardize a row pmf by its exact mean and standard
deviation and compare the exact CDF against the standard normal at every
jump, from both sides.  Identity checks enumerate compositions exactly.
Condition scans evaluate the normalized conditional moment norms of the
martingale differences over the exact law of the conditioning value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .compositions import BernoulliSpec, discard_map, enumerate_compositions
from .errors import BudgetError, FamilyError
from .families import (
    ExactPmf,
    Family,
    counting_sequence,
    descent_triangle,
    parse_family,
    triangle_row_pmf,
)
from .processes import ProcessKind, conditional_moment, parse_kind

F = Fraction
ZERO = F(0)


def normal_cdf(x: float) -> float:
    """Standard normal CDF via erfc; absolute error well below 1e-14."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def kolmogorov_distance(pmf: ExactPmf) -> float:
    """sup_x |F(x) - Phi(x)| after standardizing by exact mean and sd.

    The supremum over a lattice CDF is attained at a support point from one
    side or the other, so both F(k) and F(k-) are compared at every point.
    """
    mean = pmf.mean()
    var = pmf.variance()
    if var == 0:
        raise FamilyError("degenerate distribution: zero variance")
    sd = math.sqrt(var)
    best = 0.0
    cum = ZERO
    for k, w in pmf.items():
        z = float((k - mean)) / sd
        phi = normal_cdf(z)
        best = max(best, abs(float(cum) - phi))       # F(k-) vs Phi
        cum += w
        best = max(best, abs(float(cum) - phi))       # F(k) vs Phi
    return best


@dataclass(frozen=True)
class CltRecord:
    n: int
    mean: float
    sd: float
    K: float
    scaled: float  # sqrt(n) K or n^(1/3) K, per family

    def __post_init__(self):
        assert 0.0 <= self.K <= 1.0


@dataclass(frozen=True)
class CltResult:
    family: Family
    records: tuple[CltRecord, ...]
    skipped: tuple[int, ...]
    slope: float
    intercept: float
    max_scaled: float


def _rate_exponent(family: Family) -> float:
    if family in (Family.DERANGEMENT, Family.EXCEDANCE):
        return 1.0 / 3.0
    return 0.5


def clt_table(
    family: str | Family,
    n_values: Sequence[int],
    min_n: int = 10,
    fit_min_n: int = 20,
) -> CltResult:
    """Kolmogorov distances over exact row pmfs with a log-log rate fit.

    Rows below ``min_n`` or with zero variance are skipped.  The least
    squares fit of log K against log n uses rows with n >= fit_min_n to
    avoid small-n transients.
    """
    fam = parse_family(family)
    ns = sorted(set(n_values))
    tri = descent_triangle(fam, max(ns))
    exponent = _rate_exponent(fam)
    records, skipped = [], []
    for n in ns:
        if n < max(min_n, fam.n_min):
            skipped.append(n)
            continue
        pmf = triangle_row_pmf(tri, n)
        var = pmf.variance()
        if var == 0:
            skipped.append(n)
            continue
        k = kolmogorov_distance(pmf)
        records.append(
            CltRecord(n, float(pmf.mean()), math.sqrt(var), k, n**exponent * k)
        )
    fit_pts = [(math.log(r.n), math.log(r.K)) for r in records if r.n >= fit_min_n]
    slope, intercept = _least_squares(fit_pts)
    max_scaled = max((r.scaled for r in records), default=float("nan"))
    return CltResult(fam, tuple(records), tuple(skipped), slope, intercept, max_scaled)


def _least_squares(points: list[tuple[float, float]]) -> tuple[float, float]:
    if len(points) < 2:
        return float("nan"), float("nan")
    n = len(points)
    sx = sum(x for x, _ in points)
    sy = sum(y for _, y in points)
    sxx = sum(x * x for x, _ in points)
    sxy = sum(x * y for x, y in points)
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx)
    return slope, (sy - slope * sx) / n


# ---------------------------------------------------------------------------
# exact identities over compositions
# ---------------------------------------------------------------------------

IDENTITY_CHECKS = ("stan1", "stan2", "derangement_sum", "fibonacci_pmf")

_DEFAULT_BUDGET = 22


@dataclass(frozen=True)
class IdentityReport:
    which: str
    n: int
    lhs: Fraction
    rhs: Fraction
    holds: bool
    offset_used: int


def _weighted_composition_sum(n: int, power: int) -> Fraction:
    """sum over compositions of n of prod over 2-parts of (position-1)^power."""
    total = ZERO
    for comp in enumerate_compositions(n):
        term = F(1)
        for pos, size in comp.position_pairs():
            if size == 2:
                term *= F(pos - 1) ** power
        total += term
    return total


def identity_check(which: str, n: int, budget: int = _DEFAULT_BUDGET) -> IdentityReport:
    """Verify one exact identity at size n by full enumeration.

    stan1: the composition sum weighted by surviving two-jump positions
    equals an involution count; stan2: the squared weighting equals a
    factorial; both are checked against the natural index and its successor,
    recording which offset holds.  derangement_sum: the reciprocal-position
    product sum equals the truncated alternating series.  fibonacci_pmf: the
    triangle row equals the composition census.
    """
    if which not in IDENTITY_CHECKS:
        raise ValueError(f"unknown identity {which!r}; choose from {IDENTITY_CHECKS}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > budget:
        raise BudgetError(f"n={n} exceeds the enumeration budget {budget}")

    if which == "stan1":
        lhs = _weighted_composition_sum(n, 1)
        seq = counting_sequence(Family.INVOLUTION, n + 1)
        for offset in (0, 1):
            if lhs == seq[n + offset]:
                return IdentityReport(which, n, lhs, F(seq[n + offset]), True, offset)
        return IdentityReport(which, n, lhs, F(seq[n]), False, 0)

    if which == "stan2":
        lhs = _weighted_composition_sum(n, 2)
        for offset in (0, 1):
            rhs = F(math.factorial(n + offset))
            if lhs == rhs:
                return IdentityReport(which, n, lhs, rhs, True, offset)
        return IdentityReport(which, n, lhs, F(math.factorial(n)), False, 0)

    if which == "derangement_sum":
        total = ZERO
        for comp in enumerate_compositions(n):
            term = F(1)
            for pos, size in comp.position_pairs():
                if size == 2:
                    term *= F(1, pos)
            total += term
        lhs = total / (n + 2)
        rhs = sum(F((-1) ** k, math.factorial(k)) for k in range(n + 3))
        return IdentityReport(which, n, lhs, rhs, lhs == rhs, 0)

    # fibonacci_pmf: triangle row pmf equals the two-part census over
    # compositions of n
    tri = descent_triangle(Family.FIBONACCI, n)
    pmf = triangle_row_pmf(tri, n)
    census: dict[int, int] = {}
    for comp in enumerate_compositions(n):
        twos = sum(1 for p in comp.parts if p == 2)
        census[twos] = census.get(twos, 0) + 1
    f_n = counting_sequence(Family.FIBONACCI, n)[n]
    lhs_vec = [F(census.get(k, 0), f_n) for k in range(n // 2 + 1)]
    rhs_vec = [pmf.weight(k) for k in range(n // 2 + 1)]
    for a, b in zip(lhs_vec, rhs_vec):
        if a != b:  # report the first disagreeing weight
            return IdentityReport(which, n, a, b, False, 0)
    return IdentityReport(which, n, F(1), F(1), True, 0)


# ---------------------------------------------------------------------------
# numerical scans of the limit theorem's conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionRow:
    i: int
    second_norm: float   # sqrt(i) * || E[Y^2|F] - 1 ||_p
    third_norm: float    # i^(1/(2p')) * || E[Y^3|F] ||_p'
    fourth_sup: float    # || E[Y^4|F] ||_inf


def _conditioning_law(kind: ProcessKind, i: int, order: int):
    """Exact law of the centered conditioning value at stage i - order."""
    j = i - order
    tri = descent_triangle(kind.family, j)
    pmf = triangle_row_pmf(tri, j)
    if kind is ProcessKind.INVOLUTION:
        center = F(j - 1, 2)
    elif kind is ProcessKind.DERANGEMENT:
        center = F(i - 3, 2)
    else:
        raise FamilyError("condition scans cover involution and derangement")
    return [(k - center, w) for k, w in pmf.items() if w > 0]


def condition_scan(
    kind: str | ProcessKind,
    i_range: Sequence[int],
    p: Fraction = F(2),
    p_prime: Fraction = F(4, 3),
    order: int = 1,
) -> list[ConditionRow]:
    """Normalized conditional-moment norms of the stage-i differences.

    The conditioning value W is exact (triangle law); norms combine exact
    conditional moments with float fractional powers.  All three columns stay
    bounded over the scanned range when the normal limit applies.
    """
    kind = parse_kind(kind)
    p = F(p)
    pp = F(p_prime)
    if p <= 1 or pp <= 1:
        raise ValueError("norm exponents must exceed 1")
    rows = []
    for i in sorted(set(i_range)):
        law = _conditioning_law(kind, i, order)
        sigma2 = sum(conditional_moment(kind, i, order, w, 2) * pr for w, pr in law)
        s2f = float(sigma2)
        # || E[Y^2|F] - 1 ||_p with Y = X / sigma
        acc2 = sum(
            abs(float(conditional_moment(kind, i, order, w, 2)) / s2f - 1.0)
            ** float(p) * float(pr)
            for w, pr in law
        )
        col2 = math.sqrt(i) * acc2 ** (1.0 / float(p))
        s3 = s2f**1.5
        acc3 = sum(
            abs(float(conditional_moment(kind, i, order, w, 3)) / s3) ** float(pp)
            * float(pr)
            for w, pr in law
        )
        col3 = i ** (1.0 / (2.0 * float(pp))) * acc3 ** (1.0 / float(pp))
        col4 = max(
            float(conditional_moment(kind, i, order, w, 4)) / s2f**2 for w, pr in law
        )
        rows.append(ConditionRow(i, col2, col3, col4))
    return rows


# ---------------------------------------------------------------------------
# variance contraction of the discard reduction
# ---------------------------------------------------------------------------

def psi_variance_check(
    specs: Sequence[BernoulliSpec], n: int
) -> tuple[Fraction, Fraction, bool]:
    """(Var T_n, Var psi(T_n), holds) by exact enumeration of all words.

    ``specs[i-1]`` drives stage i: its success probability is the two-jump
    probability and its values are the two-jump/one-jump contributions.  The
    summands must have exactly zero mean; stage 1 is always a one-jump, so
    spec 1 must put no mass on the two-jump.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 14:
        raise BudgetError("exact enumeration is limited to n <= 14")
    if len(specs) < n:
        raise IndexError(f"need {n} specs, got {len(specs)}")
    specs = list(specs[:n])
    if specs[0].p != 0:
        raise ValueError("stage 1 is always a one-jump: specs[0].p must be 0")
    for idx, spec in enumerate(specs, start=1):
        if spec.mean() != 0:
            raise ValueError(f"spec {idx} has nonzero mean {spec.mean()}")

    var_t = sum(
        spec.raw_moment(2) - spec.mean() ** 2 for spec in specs
    )

    mean_psi = ZERO
    second_psi = ZERO
    for mask in range(1 << (n - 1)):
        word = [1]
        prob = F(1)
        for i in range(2, n + 1):
            two = (mask >> (i - 2)) & 1
            word.append(2 if two else 1)
            q = specs[i - 1].p
            prob *= q if two else 1 - q
        if prob == 0:
            continue
        comp = discard_map(word)
        value = sum(
            (specs[pos - 1].a if size == 2 else specs[pos - 1].b)
            for pos, size in comp.position_pairs()
        )
        mean_psi += prob * value
        second_psi += prob * value * value
    var_psi = second_psi - mean_psi * mean_psi
    return var_t, var_psi, var_psi <= var_t
