from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sumfree.dist1d import (
    DegenerateDistribution,
    HypothesisViolation,
    MixabilitySpec,
    centered_density,
    check_lengths,
    check_ww,
    concentration_L,
    concentration_L_numeric,
    conditional_sum_density,
    g2_closed,
    level_radius,
    mixability_grid_check,
)
from sumfree.piecewise import PiecewisePolynomial


def test_f24_small_t_closed_form():
    for t in (Fraction(1, 3), Fraction(1, 2), Fraction(1)):
        f = conditional_sum_density(2, 4, t)
        for x in (t / 7, t / 3, t / 2, 5 * t / 6):
            assert f(x) == 6 * x * (t - x) / t**3


def test_f1d_support_and_mean():
    for d in (2, 3, 4, 5):
        for t in (Fraction(1, 3), Fraction(d, 2), Fraction(7 * d, 8)):
            f = conditional_sum_density(1, d, t)
            assert f.domain == (max(Fraction(0), t - d + 1), min(t, Fraction(1)))
            assert f.integrate() == 1
            assert f.mean() == t / d


def test_degenerate_levels_rejected():
    with pytest.raises(DegenerateDistribution):
        conditional_sum_density(1, 3, 0)
    with pytest.raises(DegenerateDistribution):
        conditional_sum_density(1, 3, 3)
    with pytest.raises(ValueError):
        conditional_sum_density(3, 3, 1)


def test_g2_small_t_closed_form():
    t = Fraction(4, 5)
    g = centered_density(2, t)
    for x in (Fraction(0), Fraction(1, 10), Fraction(-3, 10), Fraction(2, 5)):
        assert g(x) == Fraction(3) / (2 * t) - 6 * x * x / t**3


def test_g_symmetry_and_reflection():
    for k in (1, 2, 3):
        for t in (Fraction(1, 2), Fraction(7, 5), Fraction(2 * k - 1, 1) + Fraction(1, 3)):
            if not 0 < t < 2 * k:
                continue
            g = centered_density(k, t)
            for x in np.linspace(-float(t) / 2, float(t) / 2, 23):
                q = Fraction(x).limit_denominator(10**6)
                assert g(q) == g(-q)
            gr = centered_density(k, 2 * k - t)
            assert g.breakpoints == gr.breakpoints
            assert g.pieces == gr.pieces


def test_g2_closed_matches_exact():
    for t in (0.3, 1.0, 1.4, 2.0, 2.7):
        g = centered_density(2, Fraction(t))
        for x in np.linspace(-t / 2, t / 2, 17) if t <= 2 else np.linspace(-(4 - t) / 2, (4 - t) / 2, 17):
            assert g2_closed(t, x) == pytest.approx(float(g(Fraction(x))), abs=1e-12)


def test_concentration_examples():
    for t in (0.25, 0.6, 1.0):
        for x in (0.0, t / 8, t / 4, t / 2):
            assert concentration_L(t, x) == pytest.approx(4 * x**3 / t**3, abs=1e-15)
    for t in (0.3, 1.0, 1.5, 2.0, 3.1):
        tt = 4 - t if t > 2 else t
        assert concentration_L(t, 0.0) == 0
        assert concentration_L(t, tt / 2) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError, match="invalid-argument"):
        concentration_L(1.0, 0.6)


def test_level_radius_examples():
    for t in (0.2, 0.7, 1.0):
        for K in (0.05, 0.25, 0.45):
            assert level_radius(t, K) == pytest.approx(t * (K / 4) ** (1 / 3), abs=1e-12)
    for t in (0.5, 1.3, 1.9):
        for K in (0.01, 0.2, 0.49):
            x = level_radius(t, K)
            assert concentration_L(t, x) == pytest.approx(K, abs=1e-10)
            assert x < t / 2
    with pytest.raises(ValueError):
        level_radius(1.0, 0.5)


def test_check_lengths_examples():
    assert check_lengths([1, 1, 2]).passed
    assert not check_lengths([1, 1, 3]).passed


def test_check_ww_kind1_first_coordinate():
    d = 5
    for a, b in ((Fraction(3, 2), Fraction(3, 2)), (Fraction(6, 5), Fraction(9, 5)), (Fraction(2), Fraction(2))):
        c = a + b
        f = conditional_sum_density(1, d, a)
        g = conditional_sum_density(1, d, b)
        h = conditional_sum_density(1, d, c).compose_affine(-1, 1)
        assert check_ww(MixabilitySpec((f, g, h)), 1).passed


def test_check_ww_kind1_rejects_increasing_density():
    up = PiecewisePolynomial((Fraction(0), Fraction(1)), ((Fraction(0), Fraction(2)),))
    with pytest.raises(HypothesisViolation):
        check_ww(MixabilitySpec((up, up, up)), 1)


def test_check_ww_kind2_uniforms():
    def uni(lo, hi):
        lo, hi = Fraction(lo), Fraction(hi)
        return PiecewisePolynomial((lo, hi), ((1 / (hi - lo),),))

    assert check_ww(MixabilitySpec((uni(0, 1), uni(0, 1), uni(-1, 1))), 2).passed
    assert not check_ww(MixabilitySpec((uni(0, 1), uni(0, 1), uni(-2, 1))), 2).passed


def test_check_ww_kind3_symmetric():
    g = [centered_density(2, Fraction(t)) for t in ("7/5", "7/5", "6/5")]
    rep = check_ww(MixabilitySpec(tuple(g)), 3, K_grid=[0.05, 0.2, 0.4])
    assert rep.passed and min(rep.margins) > 0
    f = conditional_sum_density(1, 3, Fraction(1, 2))
    with pytest.raises(HypothesisViolation):
        check_ww(MixabilitySpec((f, f, f)), 3, K_grid=[0.1])


def test_grid_check_small_step():
    res = mixability_grid_check(0.02)
    assert res.violations == []
    assert res.min_margin > -1e-12


def test_grid_check_step_cap():
    with pytest.raises(ValueError):
        mixability_grid_check(0.05)


@settings(max_examples=200, deadline=None)
@given(t=st.floats(0.05, 1.95), s=st.floats(0.0, 1.0))
def test_concentration_matches_integration(t, s):
    x = s * t / 2
    assert concentration_L(t, x) == pytest.approx(concentration_L_numeric(t, x), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(t=st.floats(0.05, 2.0), s=st.floats(0.01, 0.98))
def test_concentration_increasing(t, s):
    x = s * t / 2
    h = 1e-3 * t
    assert concentration_L(t, x + h) > concentration_L(t, x)


@settings(max_examples=40, deadline=None)
@given(k=st.integers(1, 3), num=st.integers(1, 999))
def test_conditional_density_symmetric_unimodal(k, num):
    t = Fraction(num, 1000) * 2 * k
    f = conditional_sum_density(k, 2 * k, t)
    assert f.integrate() == 1
    for s in (Fraction(1, 17), Fraction(1, 5), Fraction(1, 3)):
        off = s * min(t, 2 * k - t) / 2
        assert f(t / 2 - off) == f(t / 2 + off)
    hi = float(f.domain[1])
    xs = np.linspace(float(t) / 2, hi, 1000)
    vals = f(xs)
    assert np.all(np.diff(vals) <= 1e-12)
