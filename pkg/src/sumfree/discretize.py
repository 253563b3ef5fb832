"""Lattice couplings, the weight function and upper-bound certificates.

Continuous triple samplers are scaled by n, rounded, and smoothed by uniform
shifts on [r]^m with r = floor(sqrt(n)).  The weight function is a mixture of
the empirical laws of three discretized samplers; its cyclic marginal W and
the three weight conditions are evaluated exactly on that empirical mixture.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .couplings import TripleSampler, bbd_sampler, leftover_report, leftover_samplers
from .lattice import (
    REGIONS,
    SUPPORT_LABELS,
    LatticeSet,
    _level_grid,
    build_optimal_set,
    enumerate_region,
    fiber_counts,
    is_sum_free,
    optimal_fiber,
    region_of_levels,
)
from .slicevol import optimal_threshold
from .streams import named_rng

MIN_SAMPLES = 10**4


def round_half_down(v: np.ndarray) -> np.ndarray:
    """Nearest integer, ties toward minus infinity."""
    return np.ceil(np.asarray(v) - 0.5).astype(np.int64)


@dataclass(frozen=True)
class LatticeTripleSampler:
    """Scaled, rounded and smoothed copy of a continuous sampler.

    The smoothing shifts T1, T2 are uniform on [r]^m, translated by
    -ceil(r/2) when ``centered`` so that the shifts have mean about zero.
    """

    n: int
    r: int
    source: TripleSampler
    centered: bool = True

    @property
    def dim(self) -> int:
        return self.source.dim

    def draw(self, rng: np.random.Generator, size: int):
        X0, Y0, _ = self.source.draw(rng, size)
        x0 = round_half_down(self.n * X0)
        y0 = round_half_down(self.n * Y0)
        t1 = rng.integers(1, self.r + 1, size=x0.shape)
        t2 = rng.integers(1, self.r + 1, size=x0.shape)
        if self.centered:
            c = (self.r + 1) // 2
            t1 -= c
            t2 -= c
        x = x0 + t1
        y = y0 + t2
        return x, y, x + y

    def describe(self) -> dict:
        return {"source": self.source.name, "n": self.n, "r": self.r, "centered": self.centered}


def discretize_sampler(s: TripleSampler, n: int, centered: bool = True) -> LatticeTripleSampler:
    if n < 4:
        raise ValueError("invalid-argument: n must be at least 4")
    return LatticeTripleSampler(n, math.isqrt(n), s, centered)


def lattice_points_in(region, n: int, tol: float = 1e-9) -> np.ndarray:
    """Points v of {0..n}^m with v/n in the region."""
    m = region.dim
    grid = np.array(list(itertools.product(range(n + 1), repeat=m)), dtype=np.int64)
    return grid[region.contains(grid / n, tol)]


def empirical_lattice_tv(points: np.ndarray, support: np.ndarray) -> float:
    """TV between the empirical law of ``points`` and the uniform law on ``support``."""
    pk, pc = np.unique(points, axis=0, return_counts=True)
    emp = {tuple(k): c / len(points) for k, c in zip(pk, pc)}
    unif = 1.0 / len(support)
    total = 0.0
    for v in map(tuple, support):
        total += abs(emp.pop(v, 0.0) - unif)
    total += sum(emp.values())
    return total / 2


# ----------------------------------------------------------------------------
# weight function


@dataclass
class WeightFunction:
    n: int
    d: int
    triples: np.ndarray  # (K, 3m) integer rows x | y | z
    mass: np.ndarray  # (K,)
    scales: dict[str, int]
    samples: dict[str, int]
    seed: int | None = None
    notes: dict = field(default_factory=dict)
    _W: np.ndarray | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.d - 1

    def total_mass(self) -> float:
        return float(math.fsum(self.mass))

    def marginal_array(self) -> np.ndarray:
        """Dense W over {0..M}^m, M the largest coordinate in the support."""
        if self._W is None:
            m = self.m
            M = int(self.triples.max()) if len(self.triples) else self.n
            M = max(M, self.n)
            W = np.zeros((M + 1,) * m)
            for part in range(3):
                pts = self.triples[:, part * m : (part + 1) * m]
                np.add.at(W, tuple(pts.T), self.mass)
            self._W = W
        return self._W

    def W(self, v) -> float:
        arr = self.marginal_array()
        v = tuple(int(c) for c in v)
        if min(v) < 0 or max(v) >= arr.shape[0]:
            return 0.0
        return float(arr[v])

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "scales": self.scales,
            "samples": self.samples,
            "seed": self.seed,
            "notes": self.notes,
            "triples": [[int(c) for c in row] + [float(w)] for row, w in zip(self.triples, self.mass)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "WeightFunction":
        rows = data["triples"]
        m = data["d"] - 1
        T = np.array([r[: 3 * m] for r in rows], dtype=np.int64).reshape(-1, 3 * m)
        M = np.array([r[3 * m] for r in rows], dtype=float)
        return cls(data["n"], data["d"], T, M, dict(data["scales"]), dict(data["samples"]), data.get("seed"), data.get("notes", {}))


def weight_marginal(w: WeightFunction, v) -> float:
    return w.W(v)


def region_sizes(d: int, n: int) -> dict[str, int]:
    return {lab: len(enumerate_region(lab, d, n)) for lab in REGIONS}


def _empirical(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rows = np.concatenate([x, y], axis=1)
    keys, counts = np.unique(rows, axis=0, return_counts=True)
    return keys, counts


def components(d: int) -> list[tuple[str, str, TripleSampler | None]]:
    """(name, scale region, sampler) for the three mixture components."""
    acc, cce = leftover_samplers(d, strict=False)
    return [("BBD", "D", bbd_sampler(d)), ("ACC", "A", acc), ("CCE", "E", cce)]


def assemble_weight(
    d: int, n: int, samples_per_component: int, seed: int, chunk: int = 10**6, centered: bool = True
) -> WeightFunction:
    """w = |D| w0 + |A| w1 + |E| w2 with each w_i the empirical law of a discretized sampler."""
    if d not in (3, 4, 5):
        raise ValueError("invalid-argument: d must be 3, 4 or 5")
    if samples_per_component < MIN_SAMPLES:
        raise ValueError(f"invalid-argument: at least {MIN_SAMPLES} samples per component are required")
    m = d - 1
    sizes = region_sizes(d, n)
    all_rows, all_mass = [], []
    scales, samples = {}, {}
    notes = {"leftover_checks_ok": leftover_report(d)["ok"], "centered_shifts": centered}
    for name, label, sampler in components(d):
        scale = sizes[label]
        scales[name] = scale
        if sampler is None or scale == 0:
            samples[name] = 0
            continue
        ls = discretize_sampler(sampler, n, centered)
        rng = named_rng(seed, name, n)
        keys_list, counts_list = [], []
        left = samples_per_component
        while left > 0:
            k = min(chunk, left)
            x, y, _ = ls.draw(rng, k)
            keys, counts = _empirical(x, y)
            keys_list.append(keys)
            counts_list.append(counts)
            left -= k
        keys = np.concatenate(keys_list)
        counts = np.concatenate(counts_list)
        keys, inv = np.unique(keys, axis=0, return_inverse=True)
        counts = np.bincount(inv.ravel(), weights=counts).astype(np.int64)
        if counts.sum() != samples_per_component:
            raise RuntimeError("internal-error: empirical measure lost samples")
        rows = np.concatenate([keys, keys[:, :m] + keys[:, m:]], axis=1)
        all_rows.append(rows)
        all_mass.append(scale * counts / samples_per_component)
        samples[name] = samples_per_component
    T = np.concatenate(all_rows) if all_rows else np.zeros((0, 3 * m), dtype=np.int64)
    M = np.concatenate(all_mass) if all_mass else np.zeros(0)
    w = WeightFunction(n, d, T, M, scales, samples, seed, notes)
    if len(T) and np.any(T[:, :m] + T[:, m : 2 * m] != T[:, 2 * m :]):
        raise RuntimeError("internal-error: weight support violates x + y = z")
    return w


# ----------------------------------------------------------------------------
# verification


@dataclass
class CertificateReport:
    n: int
    d: int
    outside_support: float
    deviation_abde: float
    excess_c: float
    total_weight: float
    scaled: dict[str, float]
    statistical_floor: float
    bound: float | None = None
    set_size: int | None = None
    optimal_size: int | None = None
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def _labels(points: np.ndarray, d: int, n: int) -> np.ndarray:
    inside = np.all((points >= 0) & (points <= n), axis=1)
    lab = region_of_levels(points.sum(axis=1), d, n)
    return np.where(inside, lab, 5)


def in_support_mask(w: WeightFunction) -> np.ndarray:
    m = w.m
    T = w.triples
    lx, ly, lz = (_labels(T[:, k * m : (k + 1) * m], w.d, w.n) for k in range(3))
    ok = np.zeros(len(T), dtype=bool)
    for a, b, c in SUPPORT_LABELS:
        ok |= (lx == REGIONS.index(a)) & (ly == REGIONS.index(b)) & (lz == REGIONS.index(c))
    return ok


def _region_grid(d: int, n: int) -> np.ndarray:
    return region_of_levels(_level_grid(d - 1, n), d, n)


def _W_on_box(w: WeightFunction) -> np.ndarray:
    W = w.marginal_array()
    n = w.n
    return W[(slice(0, n + 1),) * w.m]


def verify_weight_conditions(w: WeightFunction, d: int | None = None, n: int | None = None) -> CertificateReport:
    d = d or w.d
    n = n or w.n
    if (d, n) != (w.d, w.n):
        raise ValueError("invalid-argument: dimensions do not match the weight function")
    ok = in_support_mask(w)
    outside = math.fsum(w.mass[~ok])
    labels = _region_grid(d, n)
    Wb = _W_on_box(w)
    is_c = labels == REGIONS.index("C")
    dev = math.fsum(np.abs(Wb[~is_c] - 1).ravel())
    excess = math.fsum(np.maximum(Wb[is_c] - 1, 0).ravel())
    scale = n ** (d - 1.5)
    floor = 0.0
    for name, s in w.scales.items():
        N = w.samples.get(name, 0)
        if N:
            floor += s * math.sqrt(2 * s / (math.pi * N))
    return CertificateReport(
        n, d, outside, dev, excess, w.total_mass(),
        {"outside_support": outside / scale, "deviation_abde": dev / scale, "excess_c": excess / scale},
        floor,
    )


def upper_bound_certificate(S: LatticeSet, w: WeightFunction) -> tuple[float, CertificateReport]:
    """A bound B >= |T| valid for every sum-free T in [n]^d, checked against S.

    For sum-free T with fibre counts lam,
      |T| = sum_w w (lam(x)+lam(y)+lam(z)) + sum_{v} (1 - W(v)) lam(v)
    and each triple contributes at most lam*(x)+lam*(y)+lam*(z)+2 on the
    support (and 2n+1, or n per in-range point, off it), while
    (1 - W(v)) lam(v) <= n max(1 - W(v), 0).
    """
    if (S.d, S.n) != (w.d, w.n):
        raise ValueError("invalid-argument: set and weight function dimensions differ")
    witness = is_sum_free(S)
    if witness is not None:
        raise ValueError(f"invalid-argument: set is not sum-free, witness {witness}")
    d, n, m = w.d, w.n, w.m
    T = w.triples
    ok = in_support_mask(w)
    parts = [T[:, k * m : (k + 1) * m] for k in range(3)]
    in_range = np.stack([np.all((p >= 1) & (p <= n), axis=1) for p in parts], axis=1)
    cap = np.where(in_range.all(axis=1), 2 * n + 1, n * in_range.sum(axis=1))
    lam_star = sum(optimal_fiber(d, n, p.sum(axis=1)) for p in parts) + 2
    per = np.where(ok, np.maximum(lam_star, cap), cap)
    opt_lines_failures = int((ok & (lam_star < cap)).sum())
    triple_term = math.fsum(w.mass * per)
    Wb = _W_on_box(w)
    inner = Wb[(slice(1, n + 1),) * m]
    deficit = math.fsum(np.maximum(1 - inner, 0).ravel()) * n
    B = triple_term + deficit
    rep = verify_weight_conditions(w)
    rep.bound = B
    rep.set_size = len(S)
    opt = len(build_optimal_set(d, n))
    rep.optimal_size = opt
    c_star = optimal_threshold(d).c_star_float
    rep.extras = {
        "triple_term": triple_term,
        "deficit_term": deficit,
        "bound_minus_set": B - len(S),
        "bound_minus_optimal": B - opt,
        "bound_minus_cstar_nd": B - c_star * n**d,
        "opt_lines_failures": opt_lines_failures,
        "set_fiber_total": int(fiber_counts(S)[(slice(1, n + 1),) * m].sum()),
    }
    if len(S) > B + 1e-9:
        raise RuntimeError(f"internal-error: certificate violated, |S| = {len(S)} > {B}")
    return B, rep


# ----------------------------------------------------------------------------
# the total-variation shift inequality


def _tv(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def _convolve(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, pa in p.items():
        for b, qb in q.items():
            k = tuple(x + y for x, y in zip(a, b))
            out[k] = out.get(k, 0.0) + pa * qb
    return out


def _random_distribution(rng: np.random.Generator, support: int, dim: int, atoms: int) -> dict:
    pts = rng.integers(0, support + 1, size=(atoms, dim))
    wts = rng.random(atoms)
    out: dict = {}
    for p, wt in zip(map(tuple, pts), wts / wts.sum()):
        out[p] = out.get(p, 0.0) + wt
    return out


def tv_shift_inequality_check(trials: int = 1000, support: int = 20, dim: int = 2, atoms: int = 8, seed: int = 0) -> float:
    """Minimum over random (X, U, T) of d(X,U) + d(U+T,U) - d(X+T,U)."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(trials):
        X, U, T = (_random_distribution(rng, support, dim, atoms) for _ in range(3))
        lhs = _tv(_convolve(X, T), U)
        rhs = _tv(X, U) + _tv(_convolve(U, T), U)
        worst = min(worst, rhs - lhs)
    return worst


def loglog_slope(ns, values) -> float:
    """Least-squares slope of log(value) against log(n); identically zero sums give slope 0."""
    vals = np.asarray(values, dtype=float)
    if np.all(vals <= 1e-12):
        return 0.0
    if np.any(vals <= 0):
        vals = vals + 1.0
    return float(np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(vals), 1)[0])


def shift_inequality_margin(X: dict, U: dict, T: dict) -> float:
    return _tv(X, U) + _tv(_convolve(U, T), U) - _tv(_convolve(X, T), U)
