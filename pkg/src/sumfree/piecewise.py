"""Exact piecewise polynomials over rational breakpoints.

Coefficients are stored in ascending powers of the global variable, as
``Fraction`` values, so sums, products, integrals and evaluations at rational
points are exact.  Float evaluation goes through a cached local-basis copy of
each piece to keep cancellation under control.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Sequence

import numpy as np

Rational = Fraction
Poly = tuple[Fraction, ...]


def as_fraction(x) -> Fraction:
    """Exact rational for ints, Fractions and floats (floats are dyadic)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


# ----------------------------------------------------------------------------
# dense polynomial helpers (ascending coefficients)


def _trim(p: Sequence[Fraction]) -> Poly:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(p) if p else (Fraction(0),)


def poly_add(p: Sequence[Fraction], q: Sequence[Fraction]) -> Poly:
    n = max(len(p), len(q))
    return _trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def poly_scale(p: Sequence[Fraction], c) -> Poly:
    c = as_fraction(c)
    return _trim([c * a for a in p])


def poly_mul(p: Sequence[Fraction], q: Sequence[Fraction]) -> Poly:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def poly_eval(p: Sequence, x):
    acc = 0
    for a in reversed(p):
        acc = acc * x + a
    return acc


def poly_deriv(p: Sequence[Fraction]) -> Poly:
    return _trim([i * p[i] for i in range(1, len(p))]) if len(p) > 1 else (Fraction(0),)


def poly_integ(p: Sequence[Fraction]) -> Poly:
    """Antiderivative with zero constant term."""
    return _trim([Fraction(0)] + [a / (i + 1) for i, a in enumerate(p)])


def poly_affine(p: Sequence[Fraction], alpha, beta) -> Poly:
    """Coefficients of x -> p(alpha*x + beta)."""
    alpha, beta = as_fraction(alpha), as_fraction(beta)
    out: Poly = (Fraction(0),)
    base: Poly = (Fraction(1),)
    lin = (beta, alpha)
    for a in p:
        out = poly_add(out, poly_scale(base, a))
        base = poly_mul(base, lin)
    return out


def poly_shift(p: Sequence[Fraction], c) -> Poly:
    """Coefficients of y -> p(y + c)."""
    return poly_affine(p, 1, c)


# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewisePolynomial:
    """A function that is polynomial on each [b_i, b_{i+1}) and zero outside.

    Evaluation is left-closed; the right end of the domain belongs to the last
    piece.  ``pieces[i]`` holds ascending coefficients in the global variable.
    """

    breakpoints: tuple[Fraction, ...]
    pieces: tuple[Poly, ...]
    _float_local: tuple = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        bps = tuple(as_fraction(b) for b in self.breakpoints)
        pcs = tuple(_trim([as_fraction(c) for c in p]) for p in self.pieces)
        if len(bps) < 2:
            raise ValueError("need at least two breakpoints")
        if any(b >= c for b, c in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly ascending")
        if len(pcs) != len(bps) - 1:
            raise ValueError("piece count must be breakpoint count - 1")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", pcs)
        local = []
        for left, p in zip(bps, pcs):
            local.append(np.array([float(c) for c in poly_shift(p, left)], dtype=float))
        object.__setattr__(self, "_float_local", tuple(local))

    # -- basic shape -------------------------------------------------------

    @property
    def domain(self) -> tuple[Fraction, Fraction]:
        return self.breakpoints[0], self.breakpoints[-1]

    @property
    def degree(self) -> int:
        return max(len(p) - 1 for p in self.pieces)

    def piece_index(self, x) -> int | None:
        lo, hi = self.domain
        if x < lo or x > hi:
            return None
        if x == hi:
            return len(self.pieces) - 1
        return bisect.bisect_right(self.breakpoints, x) - 1

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return self.evaluate_array(x)
        if isinstance(x, float):
            return self._eval_float(x)
        xf = x if hasattr(x, "radicand") else as_fraction(x)
        i = self.piece_index(xf)
        if i is None:
            return Fraction(0)
        return poly_eval(self.pieces[i], xf)

    def _eval_float(self, x: float) -> float:
        i = self.piece_index(Fraction(x))
        if i is None:
            return 0.0
        y = x - float(self.breakpoints[i])
        return float(np.polynomial.polynomial.polyval(y, self._float_local[i]))

    def evaluate_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        edges = np.array([float(b) for b in self.breakpoints])
        idx = np.searchsorted(edges, x, side="right") - 1
        idx = np.where(x == edges[-1], len(self.pieces) - 1, idx)
        out = np.zeros_like(x)
        inside = (x >= edges[0]) & (x <= edges[-1])
        for i, coeffs in enumerate(self._float_local):
            sel = inside & (idx == i)
            if sel.any():
                out[sel] = np.polynomial.polynomial.polyval(x[sel] - edges[i], coeffs)
        return out

    def left_limit(self, x) -> Fraction:
        """Value of the piece ending at x, evaluated at x."""
        x = as_fraction(x)
        i = bisect.bisect_left(self.breakpoints, x) - 1
        if i < 0 or i >= len(self.pieces):
            return Fraction(0)
        return poly_eval(self.pieces[i], x)

    # -- calculus -----------------------------------------------------------

    def antiderivative(self) -> "PiecewisePolynomial":
        """Continuous antiderivative vanishing at the left end of the domain.

        On and after the right end the value is held constant by callers via
        :meth:`cdf`; the returned object is defined on the same domain.
        """
        pieces = []
        acc = Fraction(0)
        for left, right, p in zip(self.breakpoints, self.breakpoints[1:], self.pieces):
            q = poly_integ(p)
            q = poly_add(q, (acc - poly_eval(q, left),))
            pieces.append(q)
            acc = poly_eval(q, right)
        return PiecewisePolynomial(self.breakpoints, tuple(pieces))

    def cdf(self, x):
        """Integral of self from the left end of the domain up to x."""
        lo, hi = self.domain
        anti = self._anti()
        if isinstance(x, float):
            xf = min(max(x, float(lo)), float(hi))
            return anti._eval_float(xf)
        if not hasattr(x, "radicand"):
            x = as_fraction(x)
        if x <= lo:
            return Fraction(0)
        if x >= hi:
            return anti(hi)
        return anti(x)

    def _anti(self) -> "PiecewisePolynomial":
        cached = self.__dict__.get("_anti_cache")
        if cached is None:
            cached = self.antiderivative()
            object.__setattr__(self, "_anti_cache", cached)
        return cached

    def integrate(self, lo=None, hi=None) -> Fraction:
        a, b = self.domain
        lo = a if lo is None else as_fraction(lo)
        hi = b if hi is None else as_fraction(hi)
        return self.cdf(hi) - self.cdf(lo)

    def derivative(self) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.breakpoints, tuple(poly_deriv(p) for p in self.pieces))

    def moment(self, k: int) -> Fraction:
        xk = (Fraction(0),) * k + (Fraction(1),)
        return PiecewisePolynomial(self.breakpoints, tuple(poly_mul(p, xk) for p in self.pieces)).integrate()

    def mean(self) -> Fraction:
        return self.moment(1) / self.moment(0)

    # -- algebra --------------------------------------------------------------

    def refine(self, points: Iterable) -> "PiecewisePolynomial":
        lo, hi = self.domain
        extra = sorted({as_fraction(p) for p in points if lo < as_fraction(p) < hi} - set(self.breakpoints))
        if not extra:
            return self
        bps = sorted(set(self.breakpoints) | set(extra))
        pieces = []
        for left in bps[:-1]:
            i = bisect.bisect_right(self.breakpoints, left) - 1
            pieces.append(self.pieces[i])
        return PiecewisePolynomial(tuple(bps), tuple(pieces))

    def _on(self, bps: Sequence[Fraction]) -> list[Poly]:
        """Pieces of self on the refinement ``bps`` (zero outside the domain)."""
        lo, hi = self.domain
        out = []
        for left, right in zip(bps, bps[1:]):
            if left >= lo and right <= hi:
                i = bisect.bisect_right(self.breakpoints, left) - 1
                out.append(self.pieces[i])
            else:
                out.append((Fraction(0),))
        return out

    def _binary(self, other: "PiecewisePolynomial", op, union: bool) -> "PiecewisePolynomial":
        if union:
            lo = min(self.domain[0], other.domain[0])
            hi = max(self.domain[1], other.domain[1])
        else:
            lo = max(self.domain[0], other.domain[0])
            hi = min(self.domain[1], other.domain[1])
            if lo >= hi:
                raise ValueError("supports do not overlap")
        bps = sorted({b for b in self.breakpoints + other.breakpoints if lo <= b <= hi} | {lo, hi})
        a = self._on(bps)
        b = other._on(bps)
        return PiecewisePolynomial(tuple(bps), tuple(op(p, q) for p, q in zip(a, b)))

    def __add__(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        return self._binary(other, poly_add, union=True)

    def __sub__(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        return self._binary(other, lambda p, q: poly_add(p, poly_scale(q, -1)), union=True)

    def __mul__(self, other):
        if isinstance(other, PiecewisePolynomial):
            return self._binary(other, poly_mul, union=False)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.breakpoints, tuple(poly_scale(p, c) for p in self.pieces))

    def compose_affine(self, alpha, beta) -> "PiecewisePolynomial":
        """The function x -> self(alpha*x + beta)."""
        alpha, beta = as_fraction(alpha), as_fraction(beta)
        if alpha == 0:
            raise ValueError("alpha must be nonzero")
        bps = [(b - beta) / alpha for b in self.breakpoints]
        pieces = [poly_affine(p, alpha, beta) for p in self.pieces]
        if alpha < 0:
            bps.reverse()
            pieces.reverse()
        return PiecewisePolynomial(tuple(bps), tuple(pieces))

    def restrict(self, lo, hi) -> "PiecewisePolynomial":
        lo, hi = as_fraction(lo), as_fraction(hi)
        a, b = self.domain
        lo, hi = max(lo, a), min(hi, b)
        if lo >= hi:
            raise ValueError("empty restriction")
        ref = self.refine([lo, hi])
        keep = [i for i in range(len(ref.pieces)) if ref.breakpoints[i] >= lo and ref.breakpoints[i + 1] <= hi]
        bps = ref.breakpoints[keep[0] : keep[-1] + 2]
        return PiecewisePolynomial(bps, tuple(ref.pieces[i] for i in keep))

    def simplify(self) -> "PiecewisePolynomial":
        """Merge adjacent pieces carrying identical polynomials."""
        bps = [self.breakpoints[0]]
        pcs: list[Poly] = []
        for right, p in zip(self.breakpoints[1:], self.pieces):
            if pcs and pcs[-1] == p:
                bps[-1] = right
            else:
                pcs.append(p)
                bps.append(right)
        return PiecewisePolynomial(tuple(bps), tuple(pcs))

    def is_continuous(self) -> bool:
        for x, p, q in zip(self.breakpoints[1:-1], self.pieces, self.pieces[1:]):
            if poly_eval(p, x) != poly_eval(q, x):
                return False
        return True

    def grid_masses(self, edges: np.ndarray) -> np.ndarray:
        """Integral of self over each cell [edges[i], edges[i+1]] (float)."""
        edges = np.asarray(edges, dtype=float)
        anti = self._anti()
        lo, hi = float(self.domain[0]), float(self.domain[1])
        clipped = np.clip(edges, lo, hi)
        vals = anti.evaluate_array(clipped)
        vals = np.where(edges >= hi, float(anti(self.domain[1])), vals)
        vals = np.where(edges <= lo, 0.0, vals)
        return np.diff(vals)


def irwin_hall_density(d: int) -> PiecewisePolynomial:
    """Density of the sum of d independent uniforms on [0, 1]."""
    if d < 1:
        raise ValueError("invalid-argument: d must be a positive integer")
    scale = Fraction(1, factorial(d - 1))
    pieces = []
    for k in range(d):
        acc: Poly = (Fraction(0),)
        for j in range(k + 1):
            term = poly_affine(tuple([Fraction(0)] * (d - 1) + [Fraction(1)]), 1, -j)
            acc = poly_add(acc, poly_scale(term, (-1) ** j * comb(d, j)))
        pieces.append(poly_scale(acc, scale))
    return PiecewisePolynomial(tuple(Fraction(k) for k in range(d + 1)), tuple(pieces))
