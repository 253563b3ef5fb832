"""Region descriptors for sampler targets and binned total-variation checks.

A region knows how to test membership and how to produce exact bin masses
for a handful of one-dimensional statistics of its uniform distribution.
Two-dimensional convex regions also expose a polygon for exact 2-D bin
masses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .dist1d import conditional_sum_density

Statistic = tuple[str, Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray], tuple[float, float]]


@dataclass(frozen=True)
class SliceRegion:
    """The slice {v in [0,1]^d : 1.v = t}."""

    d: int
    t: float

    def contains(self, P: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        P = np.atleast_2d(P)
        box = np.all((P >= -tol) & (P <= 1 + tol), axis=1)
        return box & (np.abs(P.sum(axis=1) - self.t) <= tol * max(1, self.d))

    @property
    def dim(self) -> int:
        return self.d

    def statistics(self) -> list[Statistic]:
        return _coordinate_statistics(self.d, self.t, self.d, pair_sum=self.d >= 4)

    def polygon(self):
        return None

    def describe(self) -> str:
        return f"slice(d={self.d}, t={self.t:.12g})"


@dataclass(frozen=True)
class ProjectedSliceRegion:
    """The projection forgetting the last coordinate of the slice {1.v = t} in [0,1]^d."""

    d: int
    t: float

    def contains(self, P: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        P = np.atleast_2d(P)
        s = P.sum(axis=1)
        box = np.all((P >= -tol) & (P <= 1 + tol), axis=1)
        return box & (s >= self.t - 1 - tol * self.d) & (s <= self.t + tol * self.d)

    @property
    def dim(self) -> int:
        return self.d - 1

    def statistics(self) -> list[Statistic]:
        return _coordinate_statistics(self.d, self.t, self.d - 1, pair_sum=self.d >= 4)

    def polygon(self):
        if self.d != 3:
            return None
        square = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        poly = clip_halfplane(square, (1.0, 1.0), self.t)
        return clip_halfplane(poly, (-1.0, -1.0), 1 - self.t)

    def describe(self) -> str:
        return f"projected-slice(d={self.d}, t={self.t:.12g})"


def _coordinate_statistics(d: int, t: float, dims: int, pair_sum: bool) -> list[Statistic]:
    tq = Fraction(t).limit_denominator(10**12) if not isinstance(t, Fraction) else t
    stats: list[Statistic] = []
    if tq <= 0 or tq >= d:
        return stats  # a single point
    one = conditional_sum_density(1, d, tq)
    rng1 = (float(one.domain[0]), float(one.domain[1]))
    for k in range(dims):
        stats.append((f"coord{k}", (lambda P, k=k: P[:, k]), one.grid_masses, rng1))
    if pair_sum and dims >= 2:
        two = conditional_sum_density(2, d, tq)
        stats.append(("pair01", lambda P: P[:, 0] + P[:, 1], two.grid_masses, (float(two.domain[0]), float(two.domain[1]))))
    return stats


@dataclass(frozen=True)
class SimplexRegion:
    """The convex hull of m+1 affinely independent points in R^m."""

    vertices: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.vertices[0])

    def barycentric(self, P: np.ndarray) -> np.ndarray:
        V = np.asarray(self.vertices, dtype=float)
        M = (V[1:] - V[0]).T
        lam = np.linalg.solve(M, (np.atleast_2d(P) - V[0]).T).T
        return np.column_stack([1 - lam.sum(axis=1), lam])

    def contains(self, P: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        V = np.asarray(self.vertices, dtype=float)
        scale = max(1.0, float(np.abs(V).max()))
        return np.all(self.barycentric(P) >= -tol * 1e3 * scale, axis=1)

    def statistics(self) -> list[Statistic]:
        m = len(self.vertices) - 1

        def beta_masses(edges: np.ndarray, m=m) -> np.ndarray:
            e = np.clip(np.asarray(edges, dtype=float), 0, 1)
            return np.diff(1 - (1 - e) ** m)

        return [
            (f"bary{k}", (lambda P, k=k: self.barycentric(P)[:, k]), beta_masses, (0.0, 1.0)) for k in range(m + 1)
        ]

    def polygon(self):
        V = np.asarray(self.vertices, dtype=float)
        if V.shape != (3, 2):
            return None
        return [tuple(p) for p in V]

    def describe(self) -> str:
        return "simplex(" + ", ".join("(" + ", ".join(f"{c:.6g}" for c in v) + ")" for v in self.vertices) + ")"


# ----------------------------------------------------------------------------
# polygon clipping for exact 2-D bin masses


def clip_halfplane(poly, normal, bound):
    """Clip a convex polygon to {p : normal.p <= bound}."""
    out = []
    nx, ny = normal
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        fp = nx * p[0] + ny * p[1] - bound
        fq = nx * q[0] + ny * q[1] - bound
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            s = fp / (fp - fq)
            out.append((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])))
    return out


def polygon_area(poly) -> float:
    if len(poly) < 3:
        return 0.0
    acc = 0.0
    for i in range(len(poly)):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % len(poly)]
        acc += x0 * y1 - x1 * y0
    return abs(acc) / 2


def polygon_bin_masses(poly, xedges: np.ndarray, yedges: np.ndarray) -> np.ndarray:
    """Area fraction of a convex polygon inside each rectangular bin."""
    total = polygon_area(poly)
    out = np.zeros((len(xedges) - 1, len(yedges) - 1))
    for i in range(len(xedges) - 1):
        strip = clip_halfplane(clip_halfplane(poly, (1.0, 0.0), xedges[i + 1]), (-1.0, 0.0), -xedges[i])
        if len(strip) < 3:
            continue
        for j in range(len(yedges) - 1):
            cell = clip_halfplane(clip_halfplane(strip, (0.0, 1.0), yedges[j + 1]), (0.0, -1.0), -yedges[j])
            out[i, j] = polygon_area(cell)
    return out / total


# ----------------------------------------------------------------------------
# total variation


def binned_tv_1d(values: np.ndarray, masses_fn, lo: float, hi: float, bins: int = 50) -> float:
    """Half the L1 distance between a histogram and exact bin masses."""
    if hi - lo <= 0:
        return 0.0
    edges = np.linspace(lo, hi, bins + 1)
    emp, _ = np.histogram(np.clip(values, lo, hi), bins=edges)
    target = masses_fn(edges)
    return 0.5 * float(np.abs(emp / len(values) - target / target.sum()).sum())


def binned_tv_2d(P: np.ndarray, poly, bins: int = 50) -> float:
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    xedges = np.linspace(min(xs), max(xs), bins + 1)
    yedges = np.linspace(min(ys), max(ys), bins + 1)
    emp, _, _ = np.histogram2d(
        np.clip(P[:, 0], xedges[0], xedges[-1]), np.clip(P[:, 1], yedges[0], yedges[-1]), bins=[xedges, yedges]
    )
    target = polygon_bin_masses(poly, xedges, yedges)
    return 0.5 * float(np.abs(emp / len(P) - target).sum())


def region_tv(region, P: np.ndarray, bins: int = 50) -> dict[str, float]:
    """Binned TV of samples P against the uniform law on ``region``, per statistic."""
    out = {}
    for name, stat, masses, (lo, hi) in region.statistics():
        out[name] = binned_tv_1d(stat(P), masses, lo, hi, bins)
    poly = region.polygon()
    if poly is not None:
        out["joint2d"] = binned_tv_2d(P, poly, bins)
    return out


def mc_noise_floor(bins: int, samples: int) -> float:
    """Expected binned TV of an exact sampler, roughly 0.5 * sqrt(2 bins / (pi N))."""
    return 0.5 * math.sqrt(2 * bins / (math.pi * samples))
