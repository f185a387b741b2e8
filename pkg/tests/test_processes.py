"""Jump transitions, martingale differences, simulation, reconstruction."""

from fractions import Fraction

import pytest

from descentlab.compositions import Composition, enumerate_compositions
from descentlab.errors import FamilyError, InfeasibleStateError
from descentlab.families import descent_triangle, triangle_row_pmf
from descentlab.processes import (
    ProcessKind,
    ProcessState,
    alpha_term,
    conditional_moment,
    exact_marginal,
    exact_means,
    gamma_factor,
    jump_distribution,
    martingale_difference_distribution,
    reconstruct,
    simulate,
)

F = Fraction

ALL_KINDS = list(ProcessKind)


def feasible_sources(kind: ProcessKind, j: int):
    """Positive-probability values at stage j, from the triangle."""
    if j == 0:
        return [0]
    if kind in (ProcessKind.DERANGEMENT, ProcessKind.EXCEDANCE) and j < 2:
        return [0]
    tri = descent_triangle(kind.family, j)
    row = tri.row(j)
    return [tri.k_min + idx for idx, c in enumerate(row) if c > 0]


def centered(kind: ProcessKind, i: int, order: int, value: int) -> Fraction:
    j = i - order
    if kind is ProcessKind.INVOLUTION:
        return value - F(j - 1, 2)
    if kind is ProcessKind.DERANGEMENT:
        return value - F(i - 3, 2)
    if kind is ProcessKind.EXCEDANCE:
        return value - F(i - 1, 2)
    return F(value)


def test_jump_distribution_derangement_example():
    state = ProcessState(ProcessKind.DERANGEMENT, 2, prev=1, last=1)
    dist = jump_distribution(state)
    pmf = dist.value_pmf(1, 1)
    assert pmf == {1: F(4, 9), 2: F(4, 9), 3: F(1, 9)}


def test_jump_distribution_involution_example():
    # I_1 = 0, I_2 uniform over {0, 1}: marginal of I_3 is row 3 of the triangle
    marg: dict[int, Fraction] = {}
    for last in (0, 1):
        dist = jump_distribution(ProcessState(ProcessKind.INVOLUTION, 1, 0, last))
        for v, p in dist.value_pmf(0, last).items():
            marg[v] = marg.get(v, F(0)) + p * F(1, 2)
    assert marg == {0: F(1, 4), 1: F(1, 2), 2: F(1, 4)}


def test_jump_distribution_fibonacci_weights():
    state = ProcessState(ProcessKind.FIBONACCI, 7, 2, 3)
    dist = jump_distribution(state)
    assert dist.two_jump_probability() == F(21, 55)  # f_7 / f_9
    assert sum(p for _, _, p in dist.entries) == 1


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_jump_probabilities_sum_to_one_everywhere(kind):
    # all states for small n; boundary and midrange states up to n = 299
    for n in range(kind.n_min, 16):
        for prev in feasible_sources(kind, n):
            for last in feasible_sources(kind, n + 1):
                dist = jump_distribution(ProcessState(kind, n, prev, last))
                assert sum(p for _, _, p in dist.entries) == 1
    for n in (40, 150, 299):
        sources = feasible_sources(kind, n)
        targets = feasible_sources(kind, n + 1)
        picks = lambda vals: {vals[0], vals[len(vals) // 2], vals[-1]}
        for prev in picks(sources):
            for last in picks(targets):
                dist = jump_distribution(ProcessState(kind, n, prev, last))
                assert sum(p for _, _, p in dist.entries) == 1


def test_jump_distribution_guards():
    with pytest.raises(InfeasibleStateError):
        ProcessState(ProcessKind.INVOLUTION, 4, prev=7, last=0)
    with pytest.raises(FamilyError):
        jump_distribution(ProcessState(ProcessKind.DERANGEMENT, 1, 0, 1))


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_exact_marginal_matches_triangle(kind):
    tri = descent_triangle(kind.family, 9)
    for n in range(kind.n_min, 10):
        assert exact_marginal(kind, n) == triangle_row_pmf(tri, n)


def test_exact_marginal_agrees_with_path_enumeration():
    # literal path expansion over all branch choices, involutions at n = 6
    kind = ProcessKind.INVOLUTION
    from descentlab.families import counting_sequence
    from descentlab.processes import _branches

    counts = counting_sequence(kind.family, 6)
    marg: dict[int, Fraction] = {}

    def walk(m, prev, last, prob):
        if m > 6:
            marg[last] = marg.get(last, F(0)) + prob
            return
        for src, inc, q in _branches(kind, m, prev, last, counts):
            if q:
                val = (prev if src == "prev" else last) + inc
                walk(m + 1, last, val, prob * q)

    walk(2, 0, 0, F(1))
    pmf = exact_marginal(kind, 6)
    assert marg == {k: w for k, w in pmf.items() if w}


# ---------------------------------------------------------------------------
# martingale differences
# ---------------------------------------------------------------------------

def test_involution_one_jump_display_example():
    dist = martingale_difference_distribution("involution", 4, 1, F(1, 2))
    assert dist.outcomes == (
        (F(1, 2) - 2, F(1, 2) + F(1, 8)),
        (F(1, 2) + 2, F(1, 2) - F(1, 8)),
    )


def test_derangement_two_jump_second_moment_closed_form():
    for i in range(4, 20):
        for value in feasible_sources(ProcessKind.DERANGEMENT, i - 2):
            w = centered(ProcessKind.DERANGEMENT, i, 2, value)
            assert conditional_moment("derangement", i, 2, w, 2) == F(i - 1, 2) ** 2 - w * w


def test_conditional_moment_trivial_examples():
    assert conditional_moment("involution", 9, 1, 0, 2) == F(81, 4)
    assert conditional_moment("derangement", 9, 1, 0, 4) == F(8, 2) ** 4
    i = 7
    w = F(3, 2)
    assert conditional_moment("involution", i, 2, w, 2) == (
        F(i * (i - 1), 2) + F(2 * i * (i - 2), i - 1) - F(2 * (i - 2), i - 1) * w * w
    )


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("order", [1, 2])
def test_zero_mean_and_closed_form_moments(kind, order):
    lo = 2 if kind.composition_offset == 0 else order + 2
    for i in range(lo, 26):
        for value in feasible_sources(kind, i - order):
            w = centered(kind, i, order, value)
            dist = martingale_difference_distribution(kind, i, order, w)
            assert dist.mean() == 0
            assert sum(p for _, p in dist.outcomes) == 1
            for r in (2, 3, 4):
                assert dist.moment(r) == conditional_moment(kind, i, order, w, r)


def test_infeasible_w_rejected():
    with pytest.raises(InfeasibleStateError):
        martingale_difference_distribution("involution", 6, 1, F(7, 2))
    with pytest.raises(InfeasibleStateError):
        martingale_difference_distribution("derangement", 6, 2, F(99))
    with pytest.raises(ValueError):
        conditional_moment("involution", 6, 1, 0, 5)


# ---------------------------------------------------------------------------
# adjustment terms and factors
# ---------------------------------------------------------------------------

def test_alpha_term_examples():
    means = exact_means(ProcessKind.DERANGEMENT, 60)
    assert means[4] == F(5, 3) and means[3] == 1
    assert alpha_term("derangement", 4, 1, means) == -1
    # order-1 terms approach -1/2, order-2 terms approach (i-1)/2
    for i in range(8, 61):
        a1 = alpha_term("derangement", i, 1, means)
        assert abs(a1 + F(1, 2)) < F(2, i)
        a2 = alpha_term("derangement", i, 2, means)
        assert abs(a2 - F(i - 1, 2)) < F(2, i)


def test_gamma_factor_examples():
    ones = Composition((1,) * 6)
    for i in range(1, 7):
        assert gamma_factor(ones, i) == 1

    assert gamma_factor(Composition((1, 1, 2)), 1) == F(4, 3)

    n = 12
    all_twos = Composition((2,) * (n // 2))
    expect = F(1)
    for k in range(1, n // 2 + 1):
        expect *= F(2 * k, 2 * k - 1)
    assert gamma_factor(all_twos, 1) == expect

    with pytest.raises(IndexError):
        gamma_factor(ones, 7)


def test_gamma_factor_bounds():
    # gamma(i)^2 <= total/i at every part boundary of every composition of
    # n <= 12 (every counted 2-part then ends at position >= i+2)
    for n in range(2, 13):
        for comp in enumerate_compositions(n):
            for i in comp.positions():
                g = gamma_factor(comp, i)
                assert g * g <= F(n, i)
    # Wallis-style cap on the extreme composition
    from math import pi, sqrt

    for n in range(2, 401, 2):
        g = gamma_factor(Composition((2,) * (n // 2)), 1)
        assert float(g) <= sqrt(pi * n / 2) * (1 + 1 / (2 * n))


# ---------------------------------------------------------------------------
# simulation and reconstruction
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kind", ALL_KINDS)
def test_simulate_deterministic_and_replayable(kind):
    t1 = simulate(kind, 30, seed=42, record=True)
    t2 = simulate(kind, 30, seed=42, record=True)
    assert t1 == t2
    assert t1.steps[-1][2] == t1.final
    vals = t1.values()
    assert vals[30] == t1.final
    t3 = simulate(kind, 30, seed=43)
    assert t3.steps != t1.steps


def test_fibonacci_small_values():
    seen = set()
    for seed in range(200):
        seen.add(simulate("fibonacci", 2, seed).final)
    assert seen == {0, 1}


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_steps_replay_consistently(kind):
    # every step's value must follow from its recorded source and jump order
    bounds = {
        ProcessKind.INVOLUTION: {1: (0, 1), 2: (0, 2)},
        ProcessKind.DERANGEMENT: {1: (0, 1), 2: (1, 2)},
        ProcessKind.FIBONACCI: {1: (0, 0), 2: (1, 1)},
        ProcessKind.EXCEDANCE: {1: (0, 1), 2: (1, 1)},
    }[kind]
    for seed in range(50):
        traj = simulate(kind, 25, seed=seed)
        vals = dict(traj.initial)
        for stage, order, value in traj.steps:
            lo, hi = bounds[order]
            assert lo <= value - vals[stage - order] <= hi
            vals[stage] = value
        assert vals[traj.n] == traj.final


def test_recorded_composition_law_matches_shifted_product_rule():
    # exhaustive fiber sums of the derangement word process equal the product
    # rule with the stage-shifted two-jump probabilities
    from itertools import product as iproduct

    from descentlab.compositions import (
        Composition,
        JumpProbabilityRule,
        composition_probability,
        discard_map,
        enumerate_compositions,
        family_rule,
    )

    der = family_rule("derangement")
    n = 10  # process size; stage words cover 3..n
    fiber: dict[tuple[int, ...], F] = {}
    for tail in iproduct((1, 2), repeat=n - 3):
        word = (1,) + tail  # stage 3 is a forced one-jump
        prob = F(1)
        for offset, letter in enumerate(word):
            m = offset + 3
            q = der.two_jump(m)
            prob *= q if letter == 2 else 1 - q
        parts = discard_map(word).parts
        fiber[parts] = fiber.get(parts, F(0)) + prob
    shifted = JumpProbabilityRule(lambda p: der.two_jump(p + 2), name="shifted")
    for comp in enumerate_compositions(n - 2):
        assert fiber.get(comp.parts, F(0)) == composition_probability(shifted, comp)
    assert sum(fiber.values()) == 1


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_reconstruction_residual_zero(kind):
    for seed in range(200):
        traj = simulate(kind, 40, seed=seed, record=True)
        assert reconstruct(traj) == 0
        assert sum(traj.decomposition.composition) == 40 - kind.composition_offset


def test_reconstruct_requires_decomposition():
    traj = simulate("involution", 10, seed=0, record=False)
    with pytest.raises(ValueError):
        reconstruct(traj)


def test_fibonacci_decomposition_shape():
    # a run whose composition matches the reference reduction, found by seed scan
    target = (2, 1, 2, 2, 1, 2, 2)
    for seed in range(2000):
        traj = simulate("fibonacci", 12, seed=seed, record=True)
        if traj.decomposition.composition == target:
            assert len(traj.decomposition.parts) == 7
            assert traj.final == 5  # five 2-parts = five descents
            assert reconstruct(traj) == 0
            break
    else:
        pytest.fail("no seed produced the target composition")


def test_simulate_domain_error():
    with pytest.raises(FamilyError):
        simulate("derangement", 1, seed=0)


# ---------------------------------------------------------------------------
# variance decomposition conditional on a composition (involutions)
# ---------------------------------------------------------------------------

def _conditional_sum_moments(comp):
    """Exact path expansion of the involution run pinned to a composition.

    Returns (E[S], E[S^2], per-part second moments via closed forms), where
    S is the sum of the differences along the composition's parts.
    """
    from descentlab.processes import _increment_numerators

    kind = ProcessKind.INVOLUTION
    # paths: (value at covered prefix end, accumulated sum, probability)
    paths = [(0, F(0), F(1))]
    closed_second = []
    for pos, size in comp.position_pairs():
        m = pos
        nxt = []
        part_m2 = F(0)
        for value, acc, prob in paths:
            w = value - F(m - size - 1, 2)
            part_m2 += prob * conditional_moment(kind, m, size, w, 2)
            if m == 1:  # initial one-jump, difference identically zero
                nxt.append((0, acc, prob))
                continue
            cums, den = _increment_numerators(kind, m, size == 2, value)
            prev_c = 0
            for delta, c in enumerate(cums):
                p = F(c - prev_c, den)
                prev_c = c
                if p == 0:
                    continue
                new_value = value + delta
                if size == 1:
                    x = w - F(m, 2) if delta == 0 else w + F(m, 2)
                else:
                    x = 2 * w + (delta - 1) * m
                nxt.append((new_value, acc + x, p * prob))
        paths = nxt
        closed_second.append(part_m2)
    mean = sum(p * s for _, s, p in paths)
    second = sum(p * s * s for _, s, p in paths)
    return mean, second, closed_second


def test_variance_decomposition_and_total_variance():
    from descentlab.compositions import (
        composition_probability,
        enumerate_compositions,
        family_rule,
    )
    from descentlab.families import descent_triangle, triangle_row_pmf

    rule = family_rule("involution")
    for n in range(2, 11):
        total = F(0)
        for comp in enumerate_compositions(n):
            mean, second, closed = _conditional_sum_moments(comp)
            assert mean == 0
            # orthogonal differences: Var(S|a) splits over the parts, and the
            # per-part terms match the closed-form conditional moments
            assert second == sum(closed)
            total += second * composition_probability(rule, comp)
        # law of total expectation: E[Z_n^2] over compositions
        var = triangle_row_pmf(descent_triangle("involution", n), n).variance()
        assert total == n * n * var
