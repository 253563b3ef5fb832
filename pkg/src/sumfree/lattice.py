"""Lattice point sets in [n]^d: the extremal slab, sum-free checks, regions, fibers."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .slicevol import optimal_threshold

REGIONS = ("A", "B", "C", "D", "E")
SUPPORT_LABELS = {("B", "B", "D"), ("A", "C", "C"), ("C", "C", "E")}

# dense convolution is used while the (2n+1)^d grid stays below this size
_FFT_LIMIT = 2_500_000


@dataclass(frozen=True, eq=False)
class LatticeSet:
    """Subset of {lower..n}^d stored as a dense boolean mask indexed by coordinate.

    ``mask[v]`` is True iff v is a member; entries with a coordinate below
    ``lower`` are always False.  ``lower`` is 1 for subsets of [n]^d and 0 for
    the region sets, which live on {0..n}^d.
    """

    d: int
    n: int
    mask: np.ndarray
    lower: int = 1

    def __post_init__(self):
        if self.mask.shape != (self.n + 1,) * self.d:
            raise ValueError("mask shape does not match (n+1)^d")
        if self.lower == 1 and self.d > 0:
            for axis in range(self.d):
                if np.take(self.mask, 0, axis=axis).any():
                    raise ValueError("member with coordinate 0 in a [n]^d set")

    @classmethod
    def from_points(cls, d: int, n: int, points: Iterable[Sequence[int]], lower: int = 1) -> "LatticeSet":
        mask = np.zeros((n + 1,) * d, dtype=bool)
        pts = np.asarray(list(points), dtype=np.int64).reshape(-1, d)
        if len(pts):
            if pts.min() < lower or pts.max() > n:
                raise ValueError("point outside the declared bounds")
            mask[tuple(pts.T)] = True
        return cls(d, n, mask, lower)

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __contains__(self, v) -> bool:
        v = tuple(int(c) for c in v)
        if len(v) != self.d or min(v) < self.lower or max(v) > self.n:
            return False
        return bool(self.mask[v])

    def points(self) -> np.ndarray:
        return np.argwhere(self.mask)

    def levels(self) -> np.ndarray:
        return self.points().sum(axis=1)


# ----------------------------------------------------------------------------
# thresholds


@lru_cache(maxsize=None)
def slab_bounds(d: int, n: int) -> tuple[int, int]:
    """Integer levels [lo, hi) with lo = ceil(u_d n), hi = ceil(2 u_d n)."""
    res = optimal_threshold(d)
    return res.ceil_affine(1, 0, n), res.ceil_affine(2, 0, n)


@lru_cache(maxsize=None)
def region_thresholds(d: int, n: int) -> tuple[int, int, int, int, int]:
    """Integer cut levels for the A..E partition of {0..n}^{d-1}.

    A: s < t1, B: t1 <= s < t2, C: t2 <= s < t3, D: t3 <= s < t4,
    E: t4 <= s <= t5, with t1..t4 the ceilings of (u-1)n, un, (2u-1)n, 2un
    and t5 = (d-1)n.
    """
    if d < 3:
        raise ValueError("invalid-argument: regions are defined for d >= 3")
    res = optimal_threshold(d)
    return (
        res.ceil_affine(1, -1, n),
        res.ceil_affine(1, 0, n),
        res.ceil_affine(2, -1, n),
        res.ceil_affine(2, 0, n),
        (d - 1) * n,
    )


def build_optimal_set(d: int, n: int) -> LatticeSet:
    """The slab {v in [n]^d : u_d n <= 1^T v < 2 u_d n}."""
    if d < 1 or d > 5:
        raise ValueError("invalid-argument: d must be in 1..5")
    if n < 1:
        raise ValueError("invalid-argument: n must be positive")
    lo, hi = slab_bounds(d, n)
    s = _level_grid(d, n)
    mask = (s >= lo) & (s < hi) & _positive_grid(d, n)
    return LatticeSet(d, n, mask, 1)


def _level_grid(d: int, n: int) -> np.ndarray:
    axes = np.arange(n + 1, dtype=np.int32)
    s = np.zeros((n + 1,) * d, dtype=np.int32)
    for k in range(d):
        shape = [1] * d
        shape[k] = n + 1
        s = s + axes.reshape(shape)
    return s


def _positive_grid(d: int, n: int) -> np.ndarray:
    ok = np.ones((n + 1,) * d, dtype=bool)
    for k in range(d):
        idx = [slice(None)] * d
        idx[k] = 0
        ok[tuple(idx)] = False
    return ok


# ----------------------------------------------------------------------------
# sum-free verification


def _find_witness_for(S: LatticeSet, z: np.ndarray):
    pts = S.points()
    diff = z[None, :] - pts
    ok = (diff >= S.lower).all(axis=1) & (diff <= S.n).all(axis=1)
    for x, y in zip(pts[ok], diff[ok]):
        if S.mask[tuple(y)]:
            return tuple(int(c) for c in x), tuple(int(c) for c in y), tuple(int(c) for c in z)
    return None


def is_sum_free(S: LatticeSet):
    """Return None if S is sum-free, else a witness (x, y, z) with x + y = z."""
    if len(S) == 0:
        return None
    levels = S.levels()
    if 2 * levels.min() > levels.max():
        return None
    size = (2 * S.n + 1) ** S.d
    if size <= _FFT_LIMIT:
        conv = fftconvolve(S.mask.astype(float), S.mask.astype(float))
        core = conv[(slice(0, S.n + 1),) * S.d]
        hits = np.argwhere((core > 0.5) & S.mask)
        for z in hits:
            w = _find_witness_for(S, z)
            if w is not None:
                return w
        return None
    return pairwise_sum_free(S)


def pairwise_sum_free(S: LatticeSet, chunk: int = 2048):
    """Reference check: test x + y against S for all pairs, in chunks."""
    pts = S.points()
    for start in range(0, len(pts), chunk):
        block = pts[start : start + chunk]
        sums = block[:, None, :] + pts[None, :, :]
        inside = (sums <= S.n).all(axis=2)
        if not inside.any():
            continue
        i, j = np.nonzero(inside)
        cand = sums[i, j]
        hit = S.mask[tuple(cand.T)]
        if hit.any():
            k = int(np.argmax(hit))
            x, y = block[i[k]], pts[j[k]]
            return tuple(int(c) for c in x), tuple(int(c) for c in y), tuple(int(c) for c in x + y)
    return None


# ----------------------------------------------------------------------------
# regions of the projected cube


def classify_region(v: Sequence[int], d: int, n: int) -> str | None:
    v = [int(c) for c in v]
    if len(v) != d - 1 or min(v) < 0 or max(v) > n:
        return None
    t1, t2, t3, t4, t5 = region_thresholds(d, n)
    s = sum(v)
    if s < t1:
        return "A"
    if s < t2:
        return "B"
    if s < t3:
        return "C"
    if s < t4:
        return "D"
    if s <= t5:
        return "E"
    return None


def region_of_levels(levels: np.ndarray, d: int, n: int) -> np.ndarray:
    """Vectorised labels 0..4 for A..E (5 for none) of integer levels."""
    t1, t2, t3, t4, t5 = region_thresholds(d, n)
    levels = np.asarray(levels)
    out = np.full(levels.shape, 5, dtype=np.int8)
    out[levels <= t5] = 4
    out[levels < t4] = 3
    out[levels < t3] = 2
    out[levels < t2] = 1
    out[levels < t1] = 0
    return out


def enumerate_region(label: str, d: int, n: int) -> LatticeSet:
    if label not in REGIONS:
        raise ValueError("invalid-argument: unknown region label")
    k = REGIONS.index(label)
    s = _level_grid(d - 1, n)
    mask = region_of_levels(s, d, n) == k
    return LatticeSet(d - 1, n, mask, 0)


def in_triple_support(x, y, z, d: int, n: int) -> bool:
    x, y, z = (tuple(int(c) for c in p) for p in (x, y, z))
    if any(len(p) != d - 1 for p in (x, y, z)):
        return False
    if any(a + b != c for a, b, c in zip(x, y, z)):
        return False
    labels = (classify_region(x, d, n), classify_region(y, d, n), classify_region(z, d, n))
    return labels in SUPPORT_LABELS


# ----------------------------------------------------------------------------
# fibers along the last coordinate


def fiber_count(S: LatticeSet, v: Sequence[int]) -> int:
    v = tuple(int(c) for c in v)
    if len(v) != S.d - 1 or min(v, default=0) < 0 or max(v, default=0) > S.n:
        return 0
    return int(S.mask[v][1:].sum())


def fiber_counts(S: LatticeSet) -> np.ndarray:
    """All fiber counts as an array indexed by v in {0..n}^{d-1}."""
    return S.mask[..., 1:].sum(axis=-1)


def optimal_fiber(d: int, n: int, levels) -> np.ndarray:
    """Fiber sizes of the optimal slab above points of [n]^{d-1} with given levels."""
    lo, hi = slab_bounds(d, n)
    s = np.asarray(levels, dtype=np.int64)
    top = np.minimum(n, hi - 1 - s)
    bottom = np.maximum(1, lo - s)
    return np.maximum(0, top - bottom + 1)


def check_opt_lines(d: int, n: int, samples: int | None = None, rng: np.random.Generator | None = None) -> int:
    """Count support triples in [n]^{d-1} with fiber sum below 2n - 1.

    Exhaustive when ``samples`` is None; otherwise checks that many random
    pairs (x, y) whose sum stays in [n]^{d-1}.
    """
    m = d - 1
    if n < 2:
        return 0
    if samples is None:
        if m > 3:
            raise ValueError("exhaustive mode supports d <= 4")
        grid = np.array(list(itertools.product(range(1, n + 1), repeat=m)), dtype=np.int64)
        violations = 0
        for x in grid:
            ys = grid[(grid + x <= n).all(axis=1)]
            violations += _count_violations(np.broadcast_to(x, ys.shape), ys, d, n)
        return violations
    rng = rng or np.random.default_rng(0)
    x = rng.integers(1, n + 1, size=(samples, m))
    y = rng.integers(1, n + 1, size=(samples, m))
    keep = (x + y <= n).all(axis=1)
    return _count_violations(x[keep], y[keep], d, n)


def _count_violations(x: np.ndarray, y: np.ndarray, d: int, n: int) -> int:
    sx, sy = x.sum(axis=1), y.sum(axis=1)
    sz = sx + sy
    lx, ly, lz = (region_of_levels(s, d, n) for s in (sx, sy, sz))
    ok = np.zeros(len(sx), dtype=bool)
    for a, b, c in SUPPORT_LABELS:
        ia, ib, ic = REGIONS.index(a), REGIONS.index(b), REGIONS.index(c)
        ok |= (lx == ia) & (ly == ib) & (lz == ic)
    lam = optimal_fiber(d, n, sx) + optimal_fiber(d, n, sy) + optimal_fiber(d, n, sz)
    return int((ok & (lam < 2 * n - 1)).sum())


# ----------------------------------------------------------------------------
# random sum-free sets for soundness experiments


def random_sum_free_set(d: int, n: int, rng: np.random.Generator, kind: str | None = None) -> LatticeSet:
    """A random sum-free subset of [n]^d drawn from one of several families."""
    kinds = ("thinned-slab", "shifted-slab", "parity", "halfspace", "greedy")
    kind = kind or kinds[int(rng.integers(len(kinds)))]
    s = _level_grid(d, n)
    pos = _positive_grid(d, n)
    if kind == "thinned-slab":
        base = build_optimal_set(d, n).mask
        mask = base & (rng.random(base.shape) < rng.uniform(0.5, 1.0))
    elif kind == "shifted-slab":
        a = int(rng.integers(max(1, (d * n) // 4), max(2, (d * n) // 2) + 1))
        mask = pos & (s >= a) & (s < 2 * a)
    elif kind == "parity":
        c = rng.integers(0, 2, size=d)
        if not c.any():
            c[int(rng.integers(d))] = 1
        dot = np.zeros(s.shape, dtype=np.int64)
        for k in range(d):
            shape = [1] * d
            shape[k] = n + 1
            dot = dot + c[k] * np.arange(n + 1).reshape(shape)
        mask = pos & (dot % 2 == 1)
        mask &= rng.random(mask.shape) < rng.uniform(0.7, 1.0)
    elif kind == "halfspace":
        k = int(rng.integers(d))
        shape = [1] * d
        shape[k] = n + 1
        coord = np.broadcast_to(np.arange(n + 1).reshape(shape), s.shape)
        mask = pos & (2 * coord > n)
    elif kind == "greedy":
        mask = build_optimal_set(d, n).mask & (rng.random(s.shape) < 0.8)
        mask = _greedy_extend(LatticeSet(d, n, mask, 1), rng, tries=200).mask
    else:
        raise ValueError("invalid-argument: unknown random set kind")
    out = LatticeSet(d, n, mask & pos, 1)
    assert is_sum_free(out) is None
    return out


def _greedy_extend(S: LatticeSet, rng: np.random.Generator, tries: int) -> LatticeSet:
    mask = S.mask.copy()
    n, d = S.n, S.d
    for _ in range(tries):
        p = rng.integers(1, n + 1, size=d)
        if mask[tuple(p)]:
            continue
        if _compatible(mask, p, n):
            mask[tuple(p)] = True
    return LatticeSet(d, n, mask, 1)


def _compatible(mask: np.ndarray, p: np.ndarray, n: int) -> bool:
    """True if adding p to the sum-free set ``mask`` keeps it sum-free."""
    if (2 * p <= n).all() and mask[tuple(2 * p)]:
        return False
    if (p % 2 == 0).all() and mask[tuple(p // 2)]:
        return False
    pts = np.argwhere(mask)
    if len(pts) == 0:
        return True
    up = pts + p
    inside = (up <= n).all(axis=1)
    if mask[tuple(up[inside].T)].any():
        return False
    down = p - pts
    inside = (down >= 1).all(axis=1)
    if mask[tuple(down[inside].T)].any():
        return False
    return True
