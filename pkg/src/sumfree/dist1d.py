"""One-dimensional conditional densities and joint-mixability checks.

``conditional_sum_density(k, d, t)`` is the law of X_1+...+X_k given that
X_1+...+X_d = t for independent uniforms X_i.  Its centred version for
d = 2k is ``centered_density``; the concentration function

    L(t, x) = int_0^x g(s) ds - x g(x),   g = centered_density(2, t),

drives the symmetric-unimodal mixability test.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .piecewise import PiecewisePolynomial, as_fraction, irwin_hall_density

EQ_TOL = 1e-12


class DegenerateDistribution(ValueError):
    pass


class HypothesisViolation(ValueError):
    pass


@lru_cache(maxsize=None)
def _ih(d: int) -> PiecewisePolynomial:
    return irwin_hall_density(d)


@lru_cache(maxsize=4096)
def conditional_sum_density(k: int, d: int, t) -> PiecewisePolynomial:
    """Density of the first k of d uniforms' sum, conditioned on the total t."""
    if not 1 <= k < d:
        raise ValueError("invalid-argument: need 1 <= k < d")
    t = as_fraction(t)
    if t <= 0 or t >= d:
        raise DegenerateDistribution("degenerate-distribution: t must lie strictly inside (0, d)")
    lo = max(Fraction(0), t - (d - k))
    hi = min(t, Fraction(k))
    left = _ih(k)
    right = _ih(d - k).compose_affine(-1, t)
    prod = (left * right).restrict(lo, hi)
    return prod.scale(1 / prod.integrate()).simplify()


@lru_cache(maxsize=4096)
def centered_density(k: int, t) -> PiecewisePolynomial:
    """g_t^k(x) = f_t^{k,2k}(x + t/2): symmetric about 0."""
    t = as_fraction(t)
    if t <= 0 or t >= 2 * k:
        raise DegenerateDistribution("degenerate-distribution: t must lie strictly inside (0, 2k)")
    return conditional_sum_density(k, 2 * k, t).compose_affine(1, t / 2)


# ----------------------------------------------------------------------------
# closed forms for k = 2


def _fold(t: float) -> float:
    return 4.0 - t if t > 2.0 else t


def g2_closed(t: float, x: float) -> float:
    """Closed form of centered_density(2, t) at x (float)."""
    t = _fold(float(t))
    x = abs(float(x))
    if x > t / 2:
        return 0.0
    if t <= 1:
        return 3 / (2 * t) - 6 * x * x / t**3
    D = -(t**3) / 2 + 2 * t * t - 2 * t + 2 / 3
    if x <= 1 - t / 2:
        return (t / 2 + x) * (t / 2 - x) / D
    return (2 - t / 2 - x) * (t / 2 - x) / D


def concentration_L(t: float, x: float) -> float:
    """L(t, x) = int_0^x g(s) ds - x g(x) for g = centered_density(2, t)."""
    t = float(t)
    if t < 0 or t > 4:
        raise ValueError("invalid-argument: t outside [0, 4]")
    t = _fold(t)
    if x < 0 or x > t / 2 + 1e-15:
        raise ValueError("invalid-argument: x outside [0, t/2]")
    if t == 0:
        return 0.0
    if t <= 1:
        return 4 * x**3 / t**3
    if x <= 1 - t / 2:
        return 2 * x**3 / (-1.5 * t**3 + 6 * t * t - 6 * t + 2)
    num = (t - 2) ** 2 * (2 * t - 1) - 12 * x * x + 8 * x**3
    return num / (-8 + 24 * t - 24 * t * t + 6 * t**3)


def concentration_L_numeric(t, x) -> float:
    """L(t, x) from the exact piecewise density (reference route)."""
    g = centered_density(2, as_fraction(t))
    xq = as_fraction(x)
    return float(g.integrate(0, xq) - xq * g(xq))


def level_radius(t: float, K: float, tol: float = 1e-12) -> float:
    """The x in [0, t/2] with L(t, x) = K, for K in (0, 1/2)."""
    if not 0 < K < 0.5:
        raise ValueError("invalid-argument: K must lie in (0, 1/2)")
    t = _fold(float(t))
    if t <= 1:
        return t * (K / 4) ** (1 / 3)
    lo, hi = 0.0, t / 2
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if concentration_L(t, mid) < K:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


# ----------------------------------------------------------------------------
# mixability conditions


@dataclass
class MixabilitySpec:
    densities: tuple[PiecewisePolynomial, PiecewisePolynomial, PiecewisePolynomial]
    a: tuple[float, float, float] = field(init=False)
    b: tuple[float, float, float] = field(init=False)
    c: tuple[float, float, float] = field(init=False)
    means: tuple[float, float, float] = field(init=False)

    def __post_init__(self):
        self.a = tuple(float(p.domain[0]) for p in self.densities)
        self.b = tuple(float(p.domain[1]) for p in self.densities)
        self.c = tuple(b - a for a, b in zip(self.a, self.b))
        self.means = tuple(float(p.mean()) for p in self.densities)


@dataclass
class WWReport:
    kind: int
    passed: bool
    margins: list[float]
    violations: list[dict]

    def as_dict(self) -> dict:
        return {"kind": self.kind, "passed": self.passed, "margins": self.margins, "violations": self.violations}


def _grid(p: PiecewisePolynomial, m: int = 1000) -> np.ndarray:
    lo, hi = float(p.domain[0]), float(p.domain[1])
    return np.linspace(lo, hi, m + 1)[:-1] + (hi - lo) / (2 * m)


def _check_decreasing(i: int, p: PiecewisePolynomial) -> None:
    xs = _grid(p)
    v = p(xs)
    bad = np.nonzero(np.diff(v) > 1e-9)[0]
    if len(bad):
        raise HypothesisViolation(f"hypothesis-violation: density {i} increases near x={xs[bad[0]]:.6f}")


def _check_uniform(i: int, p: PiecewisePolynomial) -> None:
    v = p(_grid(p))
    if np.ptp(v) > 1e-9:
        raise HypothesisViolation(f"hypothesis-violation: density {i} is not uniform")


def _check_symmetric_unimodal(i: int, p: PiecewisePolynomial) -> None:
    lo, hi = p.domain
    if lo != -hi:
        raise HypothesisViolation(f"hypothesis-violation: density {i} support is not symmetric about 0")
    xs = _grid(p)
    v = p(xs)
    asym = np.abs(v - p(-xs))
    if asym.max() > 1e-9:
        j = int(np.argmax(asym))
        raise HypothesisViolation(f"hypothesis-violation: density {i} is not symmetric near x={xs[j]:.6f}")
    right = xs >= 0
    bad = np.nonzero(np.diff(v[right]) > 1e-9)[0]
    if len(bad):
        raise HypothesisViolation(f"hypothesis-violation: density {i} not unimodal near x={xs[right][bad[0]]:.6f}")


def dagger_length(p: PiecewisePolynomial, K: float, tol: float = 1e-12) -> float:
    """l >= 0 with int_0^l (p(x) - p(l)) dx = K for a symmetric unimodal p."""
    hi = float(p.domain[1])

    def lhs(ell: float) -> float:
        return float(p.integrate(0, Fraction(ell))) - ell * p(ell)

    lo = 0.0
    if lhs(hi) < K:
        return hi
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if lhs(mid) < K:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def check_ww(spec: MixabilitySpec, kind: int, K_grid: Sequence[float] = ()) -> WWReport:
    """Check one of the three sufficient conditions for joint mixability."""
    dens = spec.densities
    if kind == 1:
        for i, p in enumerate(dens):
            _check_decreasing(i, p)
        cmax = max(spec.c)
        total_mean = sum(spec.means)
        lower = cmax + sum(spec.a)
        upper = sum(spec.b) - cmax
        margins = [total_mean - lower, upper - total_mean]
        viol = [{"side": s, "margin": m} for s, m in zip(("lower", "upper"), margins) if m < -EQ_TOL]
        return WWReport(1, not viol, margins, viol)
    if kind == 2:
        for i, p in enumerate(dens):
            _check_uniform(i, p)
        return check_lengths(spec.c)
    if kind == 3:
        for i, p in enumerate(dens):
            _check_symmetric_unimodal(i, p)
        margins, viol = [], []
        for K in K_grid:
            if not 0 < K < 0.5:
                raise ValueError("invalid-argument: K must lie in (0, 1/2)")
            ells = [dagger_length(p, K) for p in dens]
            m = sum(ells) - 2 * max(ells)
            margins.append(m)
            if m < -EQ_TOL:
                viol.append({"K": K, "lengths": ells, "margin": m})
        return WWReport(3, not viol, margins, viol)
    raise ValueError("invalid-argument: kind must be 1, 2 or 3")


def check_lengths(lengths: Sequence[float]) -> WWReport:
    """Triangle condition c1 + c2 + c3 >= 2 max(c_i) on three lengths."""
    m = sum(lengths) - 2 * max(lengths)
    viol = [] if m >= -EQ_TOL else [{"lengths": list(lengths), "margin": m}]
    return WWReport(2, not viol, [m], viol)


# ----------------------------------------------------------------------------


@dataclass
class GridCheckResult:
    violations: list[tuple[float, float, float, float, float]]
    min_margin: float
    points: int


def mixability_grid_check(step: float = 0.01, lo: float = 0.4, hi: float = 1.8) -> GridCheckResult:
    """Scan a + b + c = 4 and x, y for L(c, min(x+y, c/2)) < min(L(a,x), L(b,y))."""
    if step > 0.02:
        raise ValueError("invalid-argument: step must be at most 0.02")
    count = int(round((hi - lo) / step))
    vals = lo + step * np.arange(count + 1)
    violations = []
    min_margin = np.inf
    points = 0
    for a in vals:
        for b in vals:
            c = 4.0 - a - b
            if c < lo - 1e-12 or c > hi + 1e-12:
                continue
            xs = step * np.arange(int(np.floor(a / 2 / step + 1e-9)) + 1)
            ys = step * np.arange(int(np.floor(b / 2 / step + 1e-9)) + 1)
            La = _L_vec(a, xs)
            Lb = _L_vec(b, ys)
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            s = np.minimum(X + Y, _fold(c) / 2)
            Lc = _L_vec(c, s)
            margin = Lc - np.minimum(La[:, None], Lb[None, :])
            points += margin.size
            min_margin = min(min_margin, float(margin.min()))
            bad = np.argwhere(margin < -1e-12)
            for i, j in bad:
                violations.append((float(a), float(b), float(c), float(xs[i]), float(ys[j])))
    return GridCheckResult(violations, float(min_margin), points)


def _L_vec(t: float, x: np.ndarray) -> np.ndarray:
    t = _fold(float(t))
    x = np.minimum(np.asarray(x, dtype=float), t / 2)
    if t <= 1:
        return 4 * x**3 / t**3
    inner = 2 * x**3 / (-1.5 * t**3 + 6 * t * t - 6 * t + 2)
    outer = ((t - 2) ** 2 * (2 * t - 1) - 12 * x * x + 8 * x**3) / (-8 + 24 * t - 24 * t * t + 6 * t**3)
    return np.where(x <= 1 - t / 2, inner, outer)
