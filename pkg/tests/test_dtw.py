import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dtw_by_enumeration
from timepoint.align import (
    cost_matrix,
    dtw,
    dtw_brute_force,
    dtw_distance,
    path_cost,
    soft_dtw,
    softmin,
    track_dp_allocations,
    warp_map,
)

series = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=6)


def check_path(path, n, m):
    assert path.pairs[0] == (0, 0)
    assert path.pairs[-1] == (n - 1, m - 1)
    for (i0, j0), (i1, j1) in zip(path.pairs, path.pairs[1:]):
        assert (i1 - i0, j1 - j0) in {(1, 0), (0, 1), (1, 1)}


def test_textbook_example():
    assert dtw([0, 1, 2], [0, 2]).total_cost == 1.0
    assert dtw_brute_force([0, 1, 2], [0, 2]).total_cost == 1.0


def test_identity_is_diagonal():
    a = np.random.default_rng(0).standard_normal(9)
    p = dtw(a, a)
    assert p.total_cost == 0.0
    assert p.pairs == [(i, i) for i in range(9)]
    d = np.random.default_rng(0).standard_normal((7, 4))
    assert dtw(d, d, "cosine").pairs == [(i, i) for i in range(7)]


def test_tie_break_prefers_diagonal_then_up():
    # all-zero costs: every path ties, the diagonal-first rule decides
    p = dtw(np.zeros(4), np.zeros(2))
    assert p.pairs == [(0, 0), (1, 0), (2, 0), (3, 1)]


def test_single_pair():
    p = dtw_brute_force([1.0], [3.0])
    assert p.pairs == [(0, 0)] and p.total_cost == 2.0


def test_zero_sequences():
    assert dtw_brute_force(np.zeros(4), np.zeros(3)).total_cost == 0.0


def test_brute_force_guard():
    with pytest.raises(ValueError):
        dtw_brute_force(np.zeros(9), np.zeros(8))


def test_empty_input():
    with pytest.raises(ValueError):
        dtw([], [1.0])


def test_cosine_cost_range():
    rng = np.random.default_rng(0)
    c = cost_matrix(rng.standard_normal((6, 5)), rng.standard_normal((4, 5)), "cosine")
    assert np.all((c >= 0) & (c <= 2))
    assert cost_matrix([[1.0, 0.0]], [[-1.0, 0.0]], "cosine")[0, 0] == 2.0


def test_unknown_cost():
    with pytest.raises(ValueError):
        cost_matrix([1.0], [1.0], "manhattan")


@settings(max_examples=150, deadline=None)
@given(series, series)
def test_matches_enumeration(a, b):
    p = dtw(a, b)
    check_path(p, len(a), len(b))
    assert abs(p.total_cost - dtw_by_enumeration(cost_matrix(a, b))) <= 1e-9
    assert abs(path_cost(p, a, b) - p.total_cost) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(series, series)
def test_symmetric(a, b):
    assert dtw(a, b).total_cost == pytest.approx(dtw(b, a).total_cost, abs=1e-9)


def test_softmin_of_zeros():
    assert softmin([0.0, 0.0, 0.0], 1.0) == pytest.approx(-np.log(3))


def test_softmin_is_stable_for_large_values():
    assert softmin([1e6, 1e6 + 1], 0.01) == pytest.approx(1e6, abs=1e-6)


def test_soft_dtw_limits():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.standard_normal(10), rng.standard_normal(10)
        hard = dtw_distance(a, b)
        assert abs(soft_dtw(a, b, gamma=1e-3) - hard) < 1e-2
        for g in (0.1, 1.0, 10.0):
            assert soft_dtw(a, b, gamma=g) <= hard + 1e-9


def test_soft_dtw_identical_is_not_positive():
    a = np.random.default_rng(1).standard_normal(12)
    assert soft_dtw(a, a, gamma=1.0) <= 0.0


def test_soft_dtw_rejects_bad_gamma():
    with pytest.raises(ValueError):
        soft_dtw([1.0], [1.0], gamma=0.0)


def test_dp_allocation_ignores_feature_dimension():
    rng = np.random.default_rng(0)
    counts = []
    for d in (1, 64):
        with track_dp_allocations() as acc:
            dtw(rng.standard_normal((30, d)), rng.standard_normal((20, d)), "cosine")
        counts.append(acc.total)
    assert counts[0] == counts[1]


def test_warp_map_of_identity():
    a = np.arange(10.0)
    assert np.array_equal(warp_map(dtw(a, a), 10), a)
