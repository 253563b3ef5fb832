from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sumfree.bounds import (
    BudgetExceeded,
    RationalLP,
    brute_force_max,
    exact_simplex,
    lp_relaxation,
    milp_max,
    relaxation_witness_from_set,
    sandwich,
    search_max,
    sum_triples,
    verify_farkas,
    verify_optimality,
)
from sumfree.lattice import LatticeSet, build_optimal_set, is_sum_free, random_sum_free_set

# exact maxima of sum-free subsets of [n]^2, n = 1..12 (search for n <= 6, MILP beyond)
PLANAR_MAXIMA = [1, 3, 7, 12, 18, 25, 33, 43, 54, 66, 79, 93]


def _exhaustive_max(d, n):
    pts = list(itertools.product(range(1, n + 1), repeat=d))
    best = 0
    for bits in range(1 << len(pts)):
        chosen = [p for i, p in enumerate(pts) if bits >> i & 1]
        if len(chosen) <= best:
            continue
        if is_sum_free(LatticeSet.from_points(d, n, chosen)) is None:
            best = len(chosen)
    return best


def test_brute_force_examples():
    assert brute_force_max(1, 2)[0] == 1
    size, S = brute_force_max(1, 3)
    assert size == 2 and is_sum_free(S) is None


def test_brute_force_matches_subset_enumeration():
    for d, n in ((1, 6), (1, 9), (2, 2), (2, 3)):
        assert brute_force_max(d, n)[0] == _exhaustive_max(d, n)


def test_brute_force_d1_is_ceiling_half():
    for n in range(1, 17):
        assert brute_force_max(1, n)[0] == (n + 1) // 2


def test_planar_maxima_two_routes():
    for n in range(1, 7):
        assert search_max(2, n)[0] == PLANAR_MAXIMA[n - 1]
        assert milp_max(2, n)[0] == PLANAR_MAXIMA[n - 1]
    for n in (7, 8, 9):
        assert milp_max(2, n)[0] == PLANAR_MAXIMA[n - 1]


def test_brute_force_budget():
    with pytest.raises(BudgetExceeded) as info:
        search_max(2, 5, budget_nodes=50)
    assert info.value.bound >= info.value.best


def test_lp_examples():
    assert lp_relaxation(1, 1)[0] == 1
    assert lp_relaxation(1, 2)[0] == Fraction(3, 2)
    for n in range(3, 17):
        assert lp_relaxation(1, n)[0] == Fraction(2 * n, 3)
    assert lp_relaxation(2, 4)[0] == Fraction(25, 2)
    with pytest.raises(ValueError, match="invalid-argument"):
        lp_relaxation(2, 21)


def test_sandwich_small_instances():
    for d, n in [(1, n) for n in range(1, 13)] + [(2, n) for n in range(1, 5)]:
        r = sandwich(d, n)
        assert r["ok"], r


def test_lp_dominates_planar_fibers():
    for n in range(1, 13):
        assert lp_relaxation(1, n)[0] >= Fraction(PLANAR_MAXIMA[n - 1], n) - Fraction(1, 3)


def test_relaxation_witness_examples():
    g, obj, rep = relaxation_witness_from_set(LatticeSet.from_points(2, 4, []))
    assert obj == 0 and all(v == 0 for v in g)
    S = build_optimal_set(2, 6)
    g, obj, rep = relaxation_witness_from_set(S)
    assert rep["feasible"]
    assert obj >= rep["baseline"]
    assert obj <= lp_relaxation(1, 6)[0]
    for i, j, k in sum_triples(1, 6):
        assert g[i] + g[j] + g[k] <= 2


def test_relaxation_witness_rejects_non_sum_free():
    with pytest.raises(ValueError, match="invalid-argument"):
        relaxation_witness_from_set(LatticeSet.from_points(2, 3, [(1, 1), (2, 2)]))


def test_relaxation_witness_random_sets():
    rng = np.random.default_rng(0)
    for _ in range(15):
        n = int(rng.integers(3, 9))
        S = random_sum_free_set(2, n, rng)
        g, obj, rep = relaxation_witness_from_set(S)
        assert obj + rep["clamp_credit"] >= rep["baseline"]


def test_exact_simplex_examples():
    lp = RationalLP(1, [Fraction(1)], [{0: Fraction(1)}], [Fraction(1)])
    res = exact_simplex(lp)
    assert res.status == "optimal" and res.value == 1
    lp = RationalLP(2, [Fraction(1), Fraction(1)], [{0: 1, 1: 1}], [Fraction(2)], upper=[Fraction(1), Fraction(1)])
    res = exact_simplex(lp)
    assert res.value == 2 and verify_optimality(lp, res)


def test_exact_simplex_infeasible_has_farkas_ray():
    lp = RationalLP(2, [Fraction(1), Fraction(0)], [{0: 1, 1: 1}], [Fraction(1)], [{0: 1}], [Fraction(2)])
    res = exact_simplex(lp)
    assert res.status == "infeasible"
    assert verify_farkas(lp, res)


def test_exact_simplex_unbounded():
    lp = RationalLP(2, [Fraction(1), Fraction(0)], [{1: 1}], [Fraction(1)])
    assert exact_simplex(lp).status == "unbounded"


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_exact_simplex_strong_duality(seed):
    rng = np.random.default_rng(seed)
    m = nv = 20
    A = rng.integers(-3, 6, size=(m, nv))
    b = rng.integers(1, 20, size=m)
    c = rng.integers(-2, 8, size=nv)
    rows = [{j: Fraction(int(A[i, j])) for j in range(nv) if A[i, j]} for i in range(m)]
    lp = RationalLP(nv, [Fraction(int(v)) for v in c], rows, [Fraction(int(v)) for v in b], upper=[Fraction(5)] * nv)
    res = exact_simplex(lp)
    assert res.status == "optimal"
    assert verify_optimality(lp, res)


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 7), d=st.integers(1, 2))
def test_sandwich_property(n, d):
    if n**d > 30:
        return
    assert sandwich(d, n)["ok"]
