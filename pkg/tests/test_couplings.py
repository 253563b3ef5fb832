from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sumfree.couplings import (
    ConstructionInvalid,
    DiscreteCoupling,
    GridDensity,
    Infeasible,
    SliceRegion,
    bbd_sampler,
    chain_sampler_d4,
    chain_sampler_d5,
    compatibility_lp,
    cyclic_shift,
    d3_geometry_report,
    d3_pieces,
    first_coordinate_coupling,
    proportional_volume_form,
    leftover_report,
    leftover_samplers,
    p2_slice_sampler,
    pair_sum_coupling,
    project_forget_last,
    sample_coupling,
    sampler_report,
    sigma_simplex,
    simplex_triple_sampler,
    simplex_volume,
    Simplex,
)
from sumfree.dist1d import centered_density, conditional_sum_density
from sumfree.slicevol import optimal_threshold


def test_cyclic_shift():
    assert list(cyclic_shift([1, 2])) == [2, 1]
    assert list(cyclic_shift([1, 2, 3], 2)) == [3, 1, 2]


def test_simplex_volume_unit_corner():
    assert simplex_volume(Simplex(np.array([[0, 0], [1, 0], [0, 1]]))) == 0.5
    assert simplex_volume(Simplex(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]))) == pytest.approx(1 / 6)
    assert simplex_volume(Simplex(np.array([[0, 0], [1, 1], [2, 2]]))) == 0
    with pytest.raises(ValueError):
        Simplex(np.array([[0, 0], [1, 1]]))


@settings(max_examples=50, deadline=None)
@given(d=st.integers(2, 4), t=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
def test_sigma_simplex_levels_between_apex_and_base(d, t, seed):
    rng = np.random.default_rng(seed)
    v = rng.random(d)
    tt = t * d
    s = sigma_simplex(d, tt, v)
    mu = rng.dirichlet(np.ones(d + 1), size=200)
    levels = (mu @ s.vertices).sum(axis=1)
    lo, hi = min(tt, v.sum()), max(tt, v.sum())
    assert levels.min() >= lo - 1e-12 and levels.max() <= hi + 1e-12


def test_proportional_volume_form_in_plane():
    # for simplices in R^2 and R^3 the determinant volume is a fixed multiple of the proportional form
    rng = np.random.default_rng(5)
    for m in (2, 3):
        ratios = []
        for _ in range(100):
            v = rng.random(m)
            t = rng.random() * m
            form = proportional_volume_form(t, v)
            if form > 1e-6:
                ratios.append(simplex_volume(sigma_simplex(m, t, v)) / form)
        assert np.ptp(ratios) / np.mean(ratios) < 1e-9


def test_proportional_volume_form_fails_in_four_dimensions():
    rng = np.random.default_rng(6)
    ratios = []
    for _ in range(50):
        v = rng.random(4)
        t = rng.random() * 4
        ratios.append(simplex_volume(sigma_simplex(4, t, v)) / proportional_volume_form(t, v))
    assert np.ptp(ratios) / np.mean(ratios) > 0.1


def test_simplex_sampler_exact_sums():
    s = simplex_triple_sampler(0.0, (0.1, 0.0), 1.2, (0.1, 1.0), 1.2, (0.2, 1.0))
    X, Y, Z = s.draw(np.random.default_rng(0), 1000)
    assert np.array_equal(X + Y, Z)
    with pytest.raises(ValueError):
        simplex_triple_sampler(0.0, (0.1, 0.0), 1.0, (0.1, 1.0), 1.2, (0.2, 1.0))


def test_point_simplices_give_constant_sampler():
    s = simplex_triple_sampler(0.5, (0.25, 0.25), 1.0, (0.5, 0.5), 1.5, (0.75, 0.75))
    X, Y, Z = s.draw(np.random.default_rng(1), 50)
    assert np.allclose(X, 0.25) and np.allclose(Y, 0.5) and np.allclose(Z, 0.75)


def test_d3_geometry():
    u = optimal_threshold(3).u_float
    geo = d3_geometry_report(u)
    assert geo["tiles"] and geo["equal_areas"] and geo["double_z"]
    assert geo["vertex_sum_error"] == 0
    X, Y, Z = d3_pieces(u)
    for x, y in zip(X, Y):
        assert np.array_equal(x + y, Z)
    # the corrected third corner pieces
    assert {tuple(np.round(p, 12)) for p in X[3]} == {(0.0, round(u - 1, 12)), (round(u - 1, 12), 1.0), (0.0, 1.0)}
    assert {tuple(np.round(p, 12)) for p in Y[3]} == {(1.0, round(u - 1, 12)), (round(u - 1, 12), 0.0), (1.0, 0.0)}


def test_d3_bbd_sampler_fidelity():
    rep = sampler_report(bbd_sampler(3), 200_000, np.random.default_rng(2))
    assert rep["max_sum_residual"] == 0
    assert rep["violations"] == [0, 0, 0]
    assert rep["max_tv"] < 0.05


def test_compatibility_lp_point_masses():
    d = GridDensity(0.5, 0, (Fraction(1),))
    out = compatibility_lp(d, d, d)
    assert isinstance(out, DiscreteCoupling)
    assert out.exact_residual_zero()


def test_compatibility_lp_support_obstruction():
    u = GridDensity(0.5, 0, (Fraction(1, 2), Fraction(1, 2)))
    d = GridDensity(0.5, 0, (Fraction(1),))
    out = compatibility_lp(u, d, d)
    assert isinstance(out, Infeasible)
    assert out.verified and out.value < 0


def test_compatibility_lp_mass_mismatch():
    a = GridDensity(0.5, 0, (Fraction(1),))
    b = GridDensity(0.5, 0, (Fraction(1, 2),))
    with pytest.raises(ValueError, match="invalid-argument"):
        compatibility_lp(a, a, b)


def test_compatibility_lp_exact_uniform_case():
    u = GridDensity(0.25, 0, (Fraction(1, 2), Fraction(1, 2)))
    w = GridDensity(0.25, 0, (Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)))
    out = compatibility_lp(u, u, w)
    assert isinstance(out, DiscreteCoupling) and out.exact_residual_zero()


def test_hat_discretization_keeps_mean():
    p = conditional_sum_density(1, 5, Fraction(7, 4))
    g = GridDensity.from_density(p, 1 / 200)
    m = g.as_array()
    assert m.sum() == pytest.approx(1, abs=1e-12)
    assert float(m @ g.values) == pytest.approx(float(p.mean()), abs=1e-9)


def test_pair_sum_lp_feasible_at_u4():
    u4 = Fraction(optimal_threshold(4).u_float).limit_denominator(10**9)
    cp = pair_sum_coupling(u4, u4, 1 / 200)
    assert cp.residual() < 1e-9
    A, B = sample_coupling(cp, np.random.default_rng(0), 1000)
    assert np.all(np.abs(A) <= float(u4) + 1e-9)


def test_first_coordinate_lp_feasible():
    cp = first_coordinate_coupling(1 / 200)
    assert cp.residual() < 1e-9


def test_p2_sampler():
    s = p2_slice_sampler(1.0, 1.0, 2.0)
    X, Y, Z = s.draw(np.random.default_rng(3), 5000)
    assert np.allclose(Z, 1.0)
    assert np.allclose(X[:, 0] + Y[:, 0], 1.0)
    s = p2_slice_sampler(0.9, 0.9, 1.8)
    X, Y, Z = s.draw(np.random.default_rng(4), 5000)
    assert np.abs(X.sum(axis=1) - 0.9).max() < 1e-12
    assert np.abs(Z.sum(axis=1) - 1.8).max() < 1e-12
    rep = sampler_report(s, 200_000, np.random.default_rng(5))
    assert rep["violations"] == [0, 0, 0] and rep["max_tv"] < 0.02
    with pytest.raises(ValueError):
        p2_slice_sampler(1.5, 1.0, 2.5)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0, 2), frac=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
def test_p2_sampler_sums_and_box(a, frac, seed):
    b = frac * (2 - a)
    s = p2_slice_sampler(a, b, a + b)
    X, Y, Z = s.draw(np.random.default_rng(seed), 500)
    assert np.abs(X + Y - Z).max() <= 1e-12
    for P, t in ((X, a), (Y, b), (Z, a + b)):
        assert SliceRegion(2, t).contains(P, 1e-12).all()


def test_chain_d4_sampler():
    u = optimal_threshold(4).u_float
    s = chain_sampler_d4(u, u, 2 * u)
    X, Y, Z = s.draw(np.random.default_rng(6), 20_000)
    assert np.abs(X + Y - Z).max() <= 1e-12
    assert X.min() >= 0 and Z.max() <= 1
    assert np.abs(X.sum(axis=1) - u).max() < 1e-12
    assert np.abs(Z.sum(axis=1) - 2 * u).max() < 1e-12
    with pytest.raises(ValueError, match="invalid-argument"):
        chain_sampler_d4(0.2, 1.0, 1.2)


def test_chain_d4_pair_marginal():
    u = optimal_threshold(4).u_float
    rep = sampler_report(chain_sampler_d4(u, u, 2 * u), 200_000, np.random.default_rng(7))
    tv = rep["tv"][0]["pair01"]
    assert tv < 0.03


def test_chain_d5_sampler():
    s = chain_sampler_d5()
    X, Y, Z = s.draw(np.random.default_rng(8), 20_000)
    u = optimal_threshold(5).u_float
    assert X.shape == (20_000, 5)
    assert np.abs(X + Y - Z).max() <= 1e-12
    assert X.min() >= -1e-12 and Z.max() <= 1 + 1e-12
    assert np.abs(X.sum(axis=1) - u).max() < 1e-12
    assert np.abs(Z.sum(axis=1) - 2 * u).max() < 1e-12


def test_project_forget_last():
    assert list(project_forget_last(np.array([1, 2, 3]))) == [1, 2]
    rep = sampler_report(bbd_sampler(4), 100_000, np.random.default_rng(9))
    assert rep["max_sum_residual"] == 0 and rep["violations"] == [0, 0, 0]


def test_leftover_d3_d4_valid():
    r3 = leftover_report(3)
    assert r3["ok"]
    assert r3["ratios"]["X1/Z1"] < 1 and r3["ratios"]["X1/Y1"] < 1
    r4 = leftover_report(4)
    assert r4["ok"]
    assert r4["ratios"]["last_three_sum"] < 1
    first, second = leftover_samplers(3)
    assert second is None
    X, Y, Z = first.draw(np.random.default_rng(10), 1000)
    assert np.abs(X + Y - Z).max() <= 1e-12


def test_leftover_d3_ratios_by_determinant():
    # frozen determinant values (see the ledger for the comparison with the stated decimals)
    r = leftover_report(3)["ratios"]
    assert r["X1/Z1"] == pytest.approx(0.2910, abs=5e-4)
    assert r["X1/Y1"] == pytest.approx(0.2540, abs=5e-4)
    r = leftover_report(4)["ratios"]
    assert r["X1/Z1"] == pytest.approx(0.9399, abs=5e-4)
    assert r["last_three_sum"] == pytest.approx(0.9547, abs=5e-4)


def test_leftover_d5_strict_raises():
    with pytest.raises(ConstructionInvalid, match="construction-invalid"):
        leftover_samplers(5)
    first, second = leftover_samplers(5, strict=False)
    X, Y, Z = second.draw(np.random.default_rng(11), 1000)
    assert np.abs(X + Y - Z).max() <= 1e-12


def test_discrete_coupling_json():
    d = GridDensity(0.5, 0, (Fraction(1),))
    data = compatibility_lp(d, d, d).to_json()
    assert data["entries"] == [[0, 0, 1, 1]]
    assert math.isclose(data["h"], 0.5)


def test_centered_grid_symmetric():
    g = GridDensity.from_density(centered_density(2, Fraction(3, 2)), 1 / 100)
    m = g.as_array()
    assert np.allclose(m, m[::-1], atol=1e-12)
