from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sumfree.bounds import brute_force_max
from sumfree.couplings import TripleSampler, bbd_sampler
from sumfree.discretize import (
    LatticeTripleSampler,
    WeightFunction,
    assemble_weight,
    discretize_sampler,
    empirical_lattice_tv,
    lattice_points_in,
    loglog_slope,
    region_sizes,
    round_half_down,
    shift_inequality_margin,
    tv_shift_inequality_check,
    upper_bound_certificate,
    verify_weight_conditions,
    weight_marginal,
)
from sumfree.lattice import LatticeSet, build_optimal_set, random_sum_free_set


@pytest.fixture(scope="module")
def w16():
    return assemble_weight(3, 16, 10**5, 7)


def _constant_sampler(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)

    def draw(rng, size):
        X = np.tile(x, (size, 1))
        Y = np.tile(y, (size, 1))
        return X, Y, X + Y

    return TripleSampler(len(x), draw, (), "constant")


def test_round_half_down():
    assert list(round_half_down(np.array([0.5, 1.5, 1.6, -0.5, 2.49]))) == [0, 1, 2, -1, 2]


def test_constant_sampler_concentrates_in_box():
    ls = discretize_sampler(_constant_sampler((0.25, 0.5), (0.25, 0.25)), 16)
    assert isinstance(ls, LatticeTripleSampler)
    x, y, z = ls.draw(np.random.default_rng(0), 5000)
    assert np.array_equal(x + y, z)
    r = 4
    assert np.ptp(x, axis=0).max() <= r - 1
    assert np.ptp(z, axis=0).max() <= 2 * (r - 1)


def test_lattice_triples_sum_exactly():
    ls = discretize_sampler(bbd_sampler(3), 32)
    x, y, z = ls.draw(np.random.default_rng(1), 10**6)
    assert np.array_equal(x + y, z)


def test_discretized_marginal_close_to_uniform():
    sampler = bbd_sampler(3)
    tvs = []
    for n in (16, 64):
        ls = discretize_sampler(sampler, n)
        x, _, _ = ls.draw(np.random.default_rng(2), 400_000)
        support = lattice_points_in(sampler.targets[0], n)
        tvs.append(empirical_lattice_tv(x, support))
    assert tvs[1] < tvs[0]
    assert tvs[1] < 0.2


def test_total_mass_matches_region_sizes(w16):
    sizes = region_sizes(3, 16)
    assert w16.total_mass() == pytest.approx(sizes["D"] + sizes["A"] + sizes["E"], abs=1e-9)
    assert w16.scales["CCE"] == 0 and w16.samples["CCE"] == 0


def test_assembly_is_deterministic(w16):
    again = assemble_weight(3, 16, 10**5, 7)
    assert np.array_equal(w16.triples, again.triples)
    assert np.array_equal(w16.mass, again.mass)


def test_assembly_refuses_tiny_budget():
    with pytest.raises(ValueError, match="invalid-argument"):
        assemble_weight(3, 16, 999, 0)


def test_weight_support_sums(w16):
    m = w16.m
    T = w16.triples
    assert np.array_equal(T[:, :m] + T[:, m : 2 * m], T[:, 2 * m :])
    assert np.all(w16.mass > 0)


def test_marginal_sum_is_three_times_mass(w16):
    W = w16.marginal_array()
    assert W.sum() == pytest.approx(3 * w16.total_mass(), rel=1e-12)
    assert weight_marginal(w16, (100, 100)) == 0
    assert weight_marginal(w16, (-1, 0)) == 0


def test_weight_json_round_trip(w16):
    data = json.loads(json.dumps(w16.to_json()))
    back = WeightFunction.from_json(data)
    assert np.array_equal(back.triples, w16.triples)
    assert np.array_equal(back.mass, w16.mass)
    assert back.scales == w16.scales


def test_zero_weight_conditions():
    w = WeightFunction(16, 3, np.zeros((0, 6), dtype=np.int64), np.zeros(0), {}, {})
    rep = verify_weight_conditions(w)
    sizes = region_sizes(3, 16)
    assert rep.outside_support == 0
    assert rep.excess_c == 0
    assert rep.deviation_abde == sizes["A"] + sizes["B"] + sizes["D"] + sizes["E"]


def test_weight_condition_report(w16):
    rep = verify_weight_conditions(w16)
    assert rep.excess_c == 0
    assert rep.statistical_floor > 0
    assert set(rep.scaled) == {"outside_support", "deviation_abde", "excess_c"}


def test_deviation_shrinks_with_samples():
    small = np.mean([verify_weight_conditions(assemble_weight(3, 16, 10**4, s)).deviation_abde for s in range(3)])
    large = np.mean([verify_weight_conditions(assemble_weight(3, 16, 2 * 10**5, s)).deviation_abde for s in range(3)])
    assert large <= small


def test_certificate_on_optimal_and_empty(w16):
    S = build_optimal_set(3, 16)
    B, rep = upper_bound_certificate(S, w16)
    assert len(S) <= B
    assert rep.extras["opt_lines_failures"] == 0
    B0, _ = upper_bound_certificate(LatticeSet.from_points(3, 16, []), w16)
    assert B0 >= 0 and B0 == B


def test_certificate_rejects_non_sum_free(w16):
    bad = LatticeSet.from_points(3, 16, [(1, 1, 1), (2, 2, 2)])
    with pytest.raises(ValueError, match="invalid-argument"):
        upper_bound_certificate(bad, w16)


def test_certificate_random_sets(w16):
    rng = np.random.default_rng(3)
    for _ in range(10):
        S = random_sum_free_set(3, 16, rng)
        assert len(S) <= upper_bound_certificate(S, w16)[0]


def test_certificate_on_exact_maxima():
    for n in (4, 5):
        size, S = brute_force_max(3, n)
        w = assemble_weight(3, n, 10**4, 1)
        assert size <= upper_bound_certificate(S, w)[0]


def test_shift_inequality_examples():
    U = {(0,): 0.5, (1,): 0.5}
    X = {(0,): 0.2, (2,): 0.8}
    zero = {(0,): 1.0}
    # T = 0 gives equality
    assert shift_inequality_margin(X, U, zero) == pytest.approx(0, abs=1e-15)
    T = {(0,): 0.3, (1,): 0.7}
    # X = U reduces to d(U+T, U) <= d(U+T, U)
    assert shift_inequality_margin(U, U, T) == pytest.approx(0, abs=1e-15)


def test_shift_inequality_random():
    assert tv_shift_inequality_check(trials=300, seed=4) >= 0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), atoms=st.integers(1, 6))
def test_shift_inequality_property(seed, atoms):
    assert tv_shift_inequality_check(trials=3, support=5, dim=1, atoms=atoms, seed=seed) >= -1e-12


def test_loglog_slope():
    ns = [16, 32, 64]
    assert loglog_slope(ns, [n**1.5 for n in ns]) == pytest.approx(1.5)
    assert loglog_slope(ns, [0, 0, 0]) == 0
