"""The vectorized batch engine must match the scalar simulator draw-for-draw."""

from collections import Counter

import pytest

from descentlab.batch import batch_finals
from descentlab.processes import ProcessKind, exact_marginal, simulate

from mc import chi_square_pvalue


@pytest.mark.parametrize("kind", list(ProcessKind))
def test_batch_matches_scalar_engine(kind):
    n, reps, seed = 23, 1500, 77
    scalar = Counter(
        simulate(kind, n, seed=seed, stream_index=r).final for r in range(reps)
    )
    assert batch_finals(kind, n, reps, seed) == dict(scalar)


@pytest.mark.parametrize("kind", list(ProcessKind))
def test_batch_chunking_is_invisible(kind):
    n, seed = 12, 5
    whole = batch_finals(kind, n, 4000, seed)
    merged: dict[int, int] = {}
    for start, count in ((0, 1000), (1000, 2500), (3500, 500)):
        for v, c in batch_finals(kind, n, count, seed, start_index=start).items():
            merged[v] = merged.get(v, 0) + c
    assert merged == whole


@pytest.mark.parametrize("kind", list(ProcessKind))
def test_batch_chi_square_against_exact_marginal(kind):
    n, reps = 16, 200_000
    counts = batch_finals(kind, n, reps, master_seed=31337)
    expected = {k: w for k, w in exact_marginal(kind, n).items() if w > 0}
    assert chi_square_pvalue(counts, expected, reps) >= 0.001


def test_involution_million_replicates_small_n():
    reps = 1_000_000
    counts = batch_finals("involution", 8, reps, master_seed=424242)
    expected = {k: w for k, w in exact_marginal("involution", 8).items() if w > 0}
    assert chi_square_pvalue(counts, expected, reps) >= 0.001


def test_derangement_chi_square_at_n_64():
    from descentlab.families import descent_triangle, triangle_row_pmf

    reps = 300_000
    counts = batch_finals("derangement", 64, reps, master_seed=99)
    pmf = triangle_row_pmf(descent_triangle("derangement", 64), 64)
    expected = {k: w for k, w in pmf.items() if w > 0}
    assert chi_square_pvalue(counts, expected, reps) >= 0.001


def test_batch_small_n_edge():
    assert batch_finals("derangement", 2, 100, 0) == {1: 100}
    assert set(batch_finals("fibonacci", 2, 100, 0)) == {0, 1}
