from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sumfree.lattice import (
    REGIONS,
    LatticeSet,
    build_optimal_set,
    check_opt_lines,
    classify_region,
    enumerate_region,
    fiber_count,
    fiber_counts,
    in_triple_support,
    is_sum_free,
    optimal_fiber,
    pairwise_sum_free,
    random_sum_free_set,
    region_thresholds,
)
from sumfree.piecewise import irwin_hall_density
from sumfree.slicevol import optimal_threshold


def test_optimal_set_small_examples():
    S = build_optimal_set(1, 10)
    assert sorted(int(p[0]) for p in S.points()) == [5, 6, 7, 8, 9]
    S2 = build_optimal_set(2, 5)
    assert len(S2) == 16
    assert set(S2.levels().tolist()) == {4, 5, 6, 7}


def test_is_sum_free_examples():
    assert is_sum_free(LatticeSet.from_points(1, 2, [(1,), (2,)])) == ((1,), (1,), (2,))
    assert is_sum_free(LatticeSet.from_points(1, 3, [(2,), (3,)])) is None
    assert is_sum_free(build_optimal_set(3, 30)) is None
    assert is_sum_free(LatticeSet.from_points(2, 4, [])) is None


def test_witness_is_a_real_solution():
    S = LatticeSet.from_points(2, 6, [(1, 2), (2, 3), (3, 5), (6, 6)])
    x, y, z = is_sum_free(S)
    assert all(a + b == c for a, b, c in zip(x, y, z))
    assert x in S and y in S and z in S


def test_optimal_set_size_tracks_density():
    for d in (2, 3, 4):
        c = optimal_threshold(d).c_star_float
        for n in (10, 20, 30):
            S = build_optimal_set(d, n)
            assert abs(len(S) - c * n**d) <= 2 * d * n ** (d - 1)


def test_lattice_set_bounds():
    with pytest.raises(ValueError):
        LatticeSet.from_points(2, 3, [(0, 1)])
    with pytest.raises(ValueError):
        LatticeSet.from_points(2, 3, [(4, 1)])
    R = LatticeSet.from_points(2, 3, [(0, 1)], lower=0)
    assert (0, 1) in R and (1, 0) not in R


def test_classify_region_examples():
    assert classify_region((0, 1), 3, 10) == "A"
    assert classify_region((6, 6), 3, 10) == "C"
    assert classify_region((10, 10), 3, 10) == "D"
    assert classify_region((11, 0), 3, 10) is None
    assert classify_region((1, 2, 3), 3, 10) is None


def test_region_thresholds_d3():
    assert region_thresholds(3, 10) == (2, 12, 13, 23, 20)


def test_e_region_empty_for_d3():
    for n in (5, 17, 40):
        assert len(enumerate_region("E", 3, n)) == 0


def test_regions_partition_the_box():
    for d, n in ((3, 12), (4, 7), (5, 5)):
        total = np.zeros((n + 1,) * (d - 1), dtype=int)
        for lab in REGIONS:
            total += enumerate_region(lab, d, n).mask
        assert total.max() == 1 and total.min() == 1


def _region_volume(d, lab):
    u = optimal_threshold(d).u_float
    cuts = [0.0, u - 1, u, 2 * u - 1, 2 * u, d - 1]
    k = REGIONS.index(lab)
    cdf = irwin_hall_density(d - 1).cdf
    lo, hi = (min(max(c, 0.0), d - 1) for c in cuts[k : k + 2])
    return float(cdf(hi) - cdf(lo))


@pytest.mark.parametrize("d", [3, 4, 5])
def test_region_counts_match_volumes(d):
    for n in (10, 20, 40):
        for lab in REGIONS:
            count = len(enumerate_region(lab, d, n))
            assert abs(count - _region_volume(d, lab) * n ** (d - 1)) <= 3 * d * n ** (d - 2)


def test_b_over_d_tends_to_two():
    ratios = []
    for n in (20, 80, 320):
        ratios.append(len(enumerate_region("B", 3, n)) / len(enumerate_region("D", 3, n)))
    errs = [abs(r - 2) for r in ratios]
    assert errs[-1] < 0.02
    assert errs[-1] < errs[0]


def test_in_triple_support_examples():
    # at n = 10 the C band is the single level 12, so an A + C = C triple starts at level 0
    assert classify_region((6, 5), 3, 10) == "B"
    assert in_triple_support((0, 0), (6, 6), (6, 6), 3, 10)
    assert in_triple_support((3, 3), (4, 4), (7, 7), 3, 10)
    assert not in_triple_support((0, 1), (6, 5), (6, 7), 3, 10)


def test_in_triple_support_rejects_other_patterns():
    # A + C = D sums correctly but is not an allowed label pattern
    labels = [classify_region(p, 3, 10) for p in ((1, 0), (6, 6), (7, 6))]
    assert labels == ["A", "C", "D"]
    assert not in_triple_support((1, 0), (6, 6), (7, 6), 3, 10)
    # B + B landing in C is also rejected
    labels = [classify_region(p, 3, 10) for p in ((3, 3), (3, 3), (6, 6))]
    assert labels == ["B", "B", "C"]
    assert not in_triple_support((3, 3), (3, 3), (6, 6), 3, 10)


def test_fiber_count_examples():
    empty = LatticeSet.from_points(3, 6, [])
    assert fiber_count(empty, (1, 1)) == 0
    n = 20
    S = build_optimal_set(3, n)
    for x in range(n + 1):
        for y in range(n + 1):
            if classify_region((x, y), 3, n) == "C" and x >= 1 and y >= 1:
                assert fiber_count(S, (x, y)) == n
    lam = fiber_counts(S)
    assert lam[3, 4] == fiber_count(S, (3, 4))


def test_optimal_fiber_matches_set():
    for d, n in ((3, 15), (4, 8)):
        S = build_optimal_set(d, n)
        lam = fiber_counts(S)
        grid = np.argwhere(np.ones((n,) * (d - 1), dtype=bool)) + 1
        expect = optimal_fiber(d, n, grid.sum(axis=1))
        assert np.array_equal(lam[tuple(grid.T)], expect)


def test_nd_lines_bound_on_random_sets():
    rng = np.random.default_rng(3)
    n = 12
    for _ in range(20):
        S = random_sum_free_set(3, n, rng)
        lam = fiber_counts(S)
        x = rng.integers(0, n + 1, size=(500, 2))
        y = rng.integers(0, n + 1, size=(500, 2))
        keep = (x + y <= n).all(axis=1)
        x, y = x[keep], y[keep]
        z = x + y
        total = lam[tuple(x.T)] + lam[tuple(y.T)] + lam[tuple(z.T)]
        assert total.max() <= 2 * n + 1


def test_opt_lines_exhaustive_and_sampled():
    assert check_opt_lines(3, 20) == 0
    assert check_opt_lines(4, 10, samples=10**5, rng=np.random.default_rng(0)) == 0
    assert check_opt_lines(3, 1) == 0


@pytest.mark.parametrize("n", range(2, 26))
def test_opt_lines_zero_violations_d3(n):
    assert check_opt_lines(3, n) == 0


def test_random_sets_are_sum_free():
    rng = np.random.default_rng(1)
    for kind in ("thinned-slab", "shifted-slab", "parity", "halfspace", "greedy"):
        S = random_sum_free_set(3, 10, rng, kind)
        assert pairwise_sum_free(S) is None


@settings(max_examples=25, deadline=None)
@given(d=st.integers(1, 4), n=st.integers(1, 14), seed=st.integers(0, 2**32 - 1))
def test_sum_free_closure_random_pairs(d, n, seed):
    S = build_optimal_set(d, n)
    assert is_sum_free(S) is None
    pts = S.points()
    if len(pts) == 0:
        return
    rng = np.random.default_rng(seed)
    i = rng.integers(len(pts), size=2000)
    j = rng.integers(len(pts), size=2000)
    sums = pts[i] + pts[j]
    inside = (sums <= n).all(axis=1)
    assert not S.mask[tuple(sums[inside].T)].any()


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 7),
    members=st.lists(st.tuples(st.integers(1, 7), st.integers(1, 7)), max_size=20),
)
def test_fft_check_agrees_with_pairwise(n, members):
    pts = [p for p in members if max(p) <= n]
    S = LatticeSet.from_points(2, n, pts)
    assert (is_sum_free(S) is None) == (pairwise_sum_free(S) is None)
