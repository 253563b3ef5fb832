"""Volumes of diagonal slabs of the unit cube and the optimal slab threshold.

Slice volumes are measured through the Irwin-Hall density of 1^T v for v
uniform in [0,1]^d.  The true (d-1)-dimensional slice volume carries an extra
factor sqrt(d) on every slice, which cancels in all ratios used here and does
not move the root of the slab derivative.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import floor, isqrt

from .piecewise import (
    PiecewisePolynomial,
    as_fraction,
    irwin_hall_density,
    poly_eval,
)

MAX_DIM = 8


class InternalError(RuntimeError):
    pass


# ----------------------------------------------------------------------------
# numbers a + b*sqrt(r) with rational a, b and squarefree integer r > 1


def _squarefree_split(m: int) -> tuple[int, int]:
    """Write m = s^2 * r with r squarefree; return (s, r)."""
    s, r, f = 1, m, 2
    while f * f <= r:
        while r % (f * f) == 0:
            r //= f * f
            s *= f
        f += 1
    return s, r


@dataclass(frozen=True)
class QuadraticSurd:
    a: Fraction
    b: Fraction
    radicand: int

    def _coerce(self, other) -> "QuadraticSurd":
        if isinstance(other, QuadraticSurd):
            if other.radicand != self.radicand and other.b != 0 and self.b != 0:
                raise ValueError("mixed radicands")
            return other
        return QuadraticSurd(as_fraction(other), Fraction(0), self.radicand)

    def __add__(self, other):
        o = self._coerce(other)
        return QuadraticSurd(self.a + o.a, self.b + o.b, self.radicand)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticSurd(-self.a, -self.b, self.radicand)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        r = self.radicand
        return QuadraticSurd(self.a * o.a + self.b * o.b * r, self.a * o.b + self.b * o.a, r)

    __rmul__ = __mul__

    def sign(self) -> int:
        """Exact sign of a + b*sqrt(r)."""
        a, b, r = self.a, self.b, self.radicand
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if (a > 0) == (b > 0):
            return 1 if a > 0 else -1
        # opposite signs: compare a^2 with b^2 r
        big = a * a - b * b * r
        s = (big > 0) - (big < 0)
        return s if a > 0 else -s

    def _cmp(self, other) -> int:
        return (self - other).sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        if isinstance(other, (QuadraticSurd, Fraction, int)):
            return self._cmp(other) == 0
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, self.radicand))

    def __float__(self):
        return float(self.a) + float(self.b) * self.radicand ** 0.5

    def text(self) -> str:
        """Render as (A+B*sqrt(r))/Q with integers A, B, Q."""
        q = self.a.denominator * self.b.denominator // _gcd(self.a.denominator, self.b.denominator)
        A = int(self.a * q)
        B = int(self.b * q)
        sign = "+" if B > 0 else "-"
        coef = "" if abs(B) == 1 else f"{abs(B)}*"
        head = f"{A}{sign}{coef}sqrt({self.radicand})" if A != 0 else f"{'-' if B < 0 else ''}{coef}sqrt({self.radicand})"
        if q == 1:
            return head
        return f"({head})/{q}"


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _quadratic_roots(c0: Fraction, c1: Fraction, c2: Fraction) -> list:
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        return []
    num, den = disc.numerator, disc.denominator
    s, r = _squarefree_split(num * den)
    # sqrt(disc) = sqrt(num*den)/den = s*sqrt(r)/den
    root_coef = Fraction(s, den) / (2 * c2)
    centre = -c1 / (2 * c2)
    if r == 1:
        return sorted({centre - root_coef, centre + root_coef})
    return [QuadraticSurd(centre, -root_coef, r), QuadraticSurd(centre, root_coef, r)]


# ----------------------------------------------------------------------------


def _check_dim(d: int) -> None:
    if not isinstance(d, (int,)) or d < 1:
        raise ValueError("invalid-argument: d must be a positive integer")


@lru_cache(maxsize=None)
def _density(d: int) -> PiecewisePolynomial:
    return irwin_hall_density(d)


def slice_density(d: int, t):
    """Irwin-Hall density of dimension d at t (slice volume up to sqrt(d))."""
    _check_dim(d)
    if t < 0 or t > d:
        raise ValueError("invalid-argument: t outside [0, d]")
    return _density(d)(t)


def _cdf(d: int, t):
    return _density(d).cdf(t)


def slab_volume(d: int, u):
    """Volume of {v in [0,1]^d : u <= 1^T v < 2u}."""
    _check_dim(d)
    if u < 0 or u > d:
        raise ValueError("invalid-argument: u outside [0, d]")
    if isinstance(u, float):
        q = Fraction(u)
        return float(_cdf(d, min(2 * q, Fraction(d))) - _cdf(d, q))
    top = 2 * u
    if top > d:
        top = Fraction(d)
    return _cdf(d, top) - _cdf(d, u if isinstance(u, QuadraticSurd) else as_fraction(u))


def slab_derivative(d: int, u):
    """2 p(2u) - p(u) with p the Irwin-Hall density; -p(u) once 2u > d."""
    _check_dim(d)
    if u < 0 or u > d:
        raise ValueError("invalid-argument: u outside [0, d]")
    p = _density(d)
    if isinstance(u, float):
        return 2 * p(2 * u) - p(u) if 2 * u <= d else -p(u)
    u = as_fraction(u)
    return 2 * p(2 * u) - p(u) if 2 * u <= d else -p(u)


@lru_cache(maxsize=None)
def derivative_polynomial(d: int) -> PiecewisePolynomial:
    """The slab derivative as a piecewise polynomial on [0, d/2]."""
    p = _density(d)
    doubled = p.compose_affine(2, 0).scale(2)
    half = Fraction(d, 2)
    return (doubled - p.restrict(0, half)).simplify()


@dataclass(frozen=True)
class ThresholdResult:
    """Optimal threshold u_d and the slab density c_d* = vol(slab at u_d).

    ``u_exact`` is a Fraction or QuadraticSurd when a closed form is available;
    otherwise the threshold is pinned by the isolating interval [u_lo, u_hi].
    """

    d: int
    u_lo: Fraction
    u_hi: Fraction
    u_exact: object
    c_star_exact: object
    u_float: float
    c_star_float: float
    derivative_residual: float

    @property
    def u_d(self):
        return self.u_exact if self.u_exact is not None else (self.u_lo, self.u_hi)

    @property
    def c_d_star(self):
        return self.c_star_exact if self.c_star_exact is not None else self.c_star_float

    def u_text(self) -> str:
        return _render(self.u_exact, self.u_float)

    def c_star_text(self) -> str:
        return _render(self.c_star_exact, self.c_star_float)

    def compare(self, q) -> int:
        """Exact sign of u_d - q for rational q."""
        q = as_fraction(q)
        if self.u_exact is not None:
            diff = self.u_exact - q
            if isinstance(diff, QuadraticSurd):
                return diff.sign()
            return (diff > 0) - (diff < 0)
        if q < self.u_lo:
            return 1
        if q > self.u_hi:
            return -1
        # inside the isolating interval: the derivative is positive left of the root
        val = derivative_polynomial(self.d)(q)
        return (val > 0) - (val < 0)

    def ceil_affine(self, a: int, b: int, n: int) -> int:
        """ceil((a*u_d + b) * n) computed exactly, for integers a, b and n >= 1."""
        if a == 0:
            return b * n
        approx = (a * self.u_float + b) * n
        k = floor(approx) + 1

        def at_least(k: int) -> bool:  # k >= (a u + b) n
            q = Fraction(k - b * n, a * n)
            c = self.compare(q)
            return c <= 0 if a > 0 else c >= 0

        while not at_least(k):
            k += 1
        while at_least(k - 1):
            k -= 1
        return k


def _render(exact, approx: float) -> str:
    if isinstance(exact, QuadraticSurd):
        return exact.text()
    if isinstance(exact, Fraction):
        return f"{exact.numerator}/{exact.denominator}" if exact.denominator != 1 else str(exact.numerator)
    return repr(approx)


def _sign(x) -> int:
    if isinstance(x, QuadraticSurd):
        return x.sign()
    return (x > 0) - (x < 0)


def _bisect_root(poly, lo: Fraction, hi: Fraction, tol: float) -> tuple[Fraction, Fraction]:
    """Shrink [lo, hi] with poly(lo) > 0 > poly(hi) to width <= tol."""
    tol_q = Fraction(tol)
    while hi - lo > tol_q:
        mid = (lo + hi) / 2
        # snap to a short dyadic to keep denominators small
        v = poly_eval(poly, mid)
        if v == 0:
            return mid, mid
        if v > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


@lru_cache(maxsize=None)
def optimal_threshold(d: int, tol: float = 1e-12) -> ThresholdResult:
    """Argmax of slab_volume(d, .) located via the sign change of its derivative."""
    _check_dim(d)
    if d > MAX_DIM:
        raise ValueError("invalid-argument: d must be at most 8")
    if tol <= 0:
        raise ValueError("invalid-argument: tol must be positive")
    deriv = derivative_polynomial(d)
    candidates = []  # (lo, hi, exact-or-None)
    bps = deriv.breakpoints
    for i, (left, right, poly) in enumerate(zip(bps, bps[1:], deriv.pieces)):
        v_left = poly_eval(poly, left)
        v_right = poly_eval(poly, right)
        # a jump or zero exactly at the left breakpoint
        prev = deriv.left_limit(left) if i > 0 else None
        if prev is not None and prev > 0 and v_left <= 0:
            candidates.append((left, left, left))
            continue
        if v_left > 0 and v_right < 0:
            deg = len(poly) - 1
            if deg == 1:
                root = -poly[0] / poly[1]
                candidates.append((root, root, root))
            elif deg == 2:
                roots = [r for r in _quadratic_roots(poly[0], poly[1], poly[2]) if left < r < right]
                if len(roots) != 1:
                    raise InternalError("quadratic piece without a unique interior root")
                r = roots[0]
                if isinstance(r, Fraction):
                    candidates.append((r, r, r))
                else:
                    lo, hi = _bisect_root(poly, left, right, tol)
                    candidates.append((lo, hi, r))
            else:
                lo, hi = _bisect_root(poly, left, right, tol)
                candidates.append((lo, hi, lo if lo == hi else None))
    # the final endpoint d/2: derivative beyond is -p(u) <= 0
    last = deriv.pieces[-1]
    if poly_eval(last, bps[-1]) > 0:
        candidates.append((bps[-1], bps[-1], bps[-1]))
    if not candidates:
        raise InternalError("no sign change of the slab derivative found")

    def volume_of(c):
        lo, hi, exact = c
        if exact is not None:
            return float(slab_volume(d, exact))
        return float(slab_volume(d, (lo + hi) / 2))

    best = max(candidates, key=volume_of)
    lo, hi, exact = best
    c_exact = slab_volume(d, exact) if exact is not None else None
    u_float = float(exact) if exact is not None else float((lo + hi) / 2)
    if exact is not None:
        c_float = float(c_exact)
    else:
        c_float = float(slab_volume(d, (lo + hi) / 2))
    residual = float(slab_derivative(d, u_float)) if d > 1 else 0.0
    return ThresholdResult(
        d=d,
        u_lo=lo,
        u_hi=hi,
        u_exact=exact,
        c_star_exact=c_exact,
        u_float=u_float,
        c_star_float=c_float,
        derivative_residual=residual,
    )
