"""Couplings (X, Y, Z) with X + Y = Z and prescribed uniform marginals.

Samplers are immutable; ``draw(rng, size)`` takes an explicit generator and
returns three arrays of shape (size, m).  The nonconstructive mixability
witnesses are replaced by a discrete transportation LP whose solution is
sampled with within-node jitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .bounds import LP_VARIABLE_CAP, RationalLP, exact_simplex, verify_farkas
from .dist1d import centered_density, check_ww, conditional_sum_density, MixabilitySpec
from .piecewise import PiecewisePolynomial, poly_mul
from .regions import ProjectedSliceRegion, SimplexRegion, SliceRegion, region_tv
from .slicevol import InternalError, optimal_threshold

SUM_TOL = 1e-12
DEFAULT_H = 1 / 200
INNER_H = 1 / 50


class ConstructionInvalid(ValueError):
    pass


# ----------------------------------------------------------------------------
# simplices


def cyclic_shift(v: Sequence, i: int = 1) -> np.ndarray:
    """sigma^i: cyclic left shift of the coordinates, applied i times."""
    v = np.asarray(v, dtype=float)
    return np.roll(v, -i)


@dataclass(frozen=True)
class Simplex:
    vertices: np.ndarray  # (m+1, m)

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1] + 1:
            raise ValueError("invalid-argument: a simplex in R^m needs m+1 vertices")
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def level_range(self) -> tuple[float, float]:
        s = self.vertices.sum(axis=1)
        return float(s.min()), float(s.max())

    def region(self) -> SimplexRegion:
        return SimplexRegion(self.vertices)


def sigma_simplex(d: int, t: float, v: Sequence) -> Simplex:
    """conv{t 1/d, sigma^i(v) : 0 <= i < d} in R^d."""
    v = np.asarray(v, dtype=float)
    if v.shape != (d,):
        raise ValueError("invalid-argument: v must have d coordinates")
    if not -SUM_TOL <= t <= d + SUM_TOL or np.any(v < -SUM_TOL) or np.any(v > 1 + SUM_TOL):
        raise ValueError("invalid-argument: need t in [0, d] and v in [0,1]^d")
    apex = np.full(d, t / d)
    return Simplex(np.vstack([apex] + [cyclic_shift(v, i) for i in range(d)]))


def simplex_volume(s: Simplex) -> float:
    V = s.vertices
    return abs(float(np.linalg.det(V[1:] - V[0]))) / math.factorial(s.dim)


def uniform_simplex_weights(rng: np.random.Generator, size: int, k: int) -> np.ndarray:
    """Uniform points of the standard simplex with k+1 weights (normalized exponentials)."""
    e = rng.exponential(size=(size, k + 1))
    return e / e.sum(axis=1, keepdims=True)


# ----------------------------------------------------------------------------
# samplers


@dataclass(frozen=True)
class TripleSampler:
    dim: int
    draw_fn: Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray, np.ndarray]]
    targets: tuple
    name: str = "sampler"
    info: dict = field(default_factory=dict, compare=False)

    def draw(self, rng: np.random.Generator, size: int = 1):
        return self.draw_fn(rng, size)


def simplex_triple_sampler(tx: float, x, ty: float, y, tz: float, z) -> TripleSampler:
    """Couple uniforms on Sigma(tx, x), Sigma(ty, y), Sigma(tz, z) through a shared weight vector."""
    x, y, z = (np.asarray(p, dtype=float) for p in (x, y, z))
    if abs(tx + ty - tz) > SUM_TOL or np.abs(x + y - z).max() > SUM_TOL:
        raise ValueError("invalid-argument: need tx + ty = tz and x + y = z")
    d = len(x)
    sx, sy, sz = sigma_simplex(d, tx, x), sigma_simplex(d, ty, y), sigma_simplex(d, tz, z)

    def draw(rng, size):
        mu = uniform_simplex_weights(rng, size, d)
        # vertex 0 is the apex, carrying weight mu_d in the affine map
        w = np.column_stack([mu[:, d], mu[:, :d]])
        X = w @ sx.vertices
        Y = w @ sy.vertices
        return X, Y, X + Y

    return TripleSampler(d, draw, (sx.region(), sy.region(), sz.region()), "simplex", {"simplices": (sx, sy, sz)})


# ----------------------------------------------------------------------------
# the planar B x B x D coupling


def d3_pieces(u: float):
    """Triangle pieces X_i, Y_i of the hexagon and the target triangle Z, vertices matched in order."""
    w = u - 1
    X = [
        [(0, w), (w, 1), (1, 0)],
        [(0, w), (w, 0), (1, 0)],
        [(1, w), (w, 1), (1, 0)],
        [(0, w), (w, 1), (0, 1)],
    ]
    Y = [
        [(1, w), (w, 0), (0, 1)],
        [(1, w), (w, 1), (0, 1)],
        [(0, w), (w, 0), (0, 1)],
        [(1, w), (w, 0), (1, 0)],
    ]
    Z = [(1, 2 * w), (2 * w, 1), (1, 1)]
    return [np.array(p, dtype=float) for p in X], [np.array(p, dtype=float) for p in Y], np.array(Z, dtype=float)


def _tri_area(T: np.ndarray) -> float:
    return abs(float(np.linalg.det(T[1:] - T[0]))) / 2


def d3_geometry_report(u: float) -> dict:
    X, Y, Z = d3_pieces(u)
    area_z = _tri_area(Z)
    areas_x = [_tri_area(T) for T in X]
    areas_y = [_tri_area(T) for T in Y]
    hexagon = 1 - (u - 1) ** 2 / 2 - (2 - u) ** 2 / 2
    sums = max(float(np.abs(x + y - Z).max()) for x, y in zip(X, Y))
    return {
        "area_z": area_z,
        "areas_x": areas_x,
        "areas_y": areas_y,
        "hexagon_area": hexagon,
        "vertex_sum_error": sums,
        "tiles": abs(sum(areas_x) - hexagon) < 1e-12 and abs(sum(areas_y) - hexagon) < 1e-12,
        "equal_areas": all(abs(a - b) < 1e-12 for a, b in zip(areas_x, areas_y)),
        "double_z": abs(sum(areas_x) - 2 * area_z) < 1e-12,
    }


def d3_bbd_sampler() -> TripleSampler:
    u = optimal_threshold(3).u_float
    X, Y, Z = d3_pieces(u)
    geo = d3_geometry_report(u)
    if not (geo["tiles"] and geo["equal_areas"] and geo["double_z"] and geo["vertex_sum_error"] < 1e-12):
        raise InternalError(f"internal-error: planar piece geometry fails {geo}")
    probs = np.array(geo["areas_x"]) / (2 * geo["area_z"])
    Xs, Ys = np.stack(X), np.stack(Y)

    def draw(rng, size):
        idx = rng.choice(4, size=size, p=probs / probs.sum())
        mu = uniform_simplex_weights(rng, size, 2)
        Xp = np.einsum("nk,nkj->nj", mu, Xs[idx])
        Yp = np.einsum("nk,nkj->nj", mu, Ys[idx])
        return Xp, Yp, Xp + Yp

    targets = (ProjectedSliceRegion(3, u), ProjectedSliceRegion(3, u), ProjectedSliceRegion(3, 2 * u))
    return TripleSampler(2, draw, targets, "bbd3", {"geometry": geo})


def project_forget_last(p):
    """Drop the final coordinate (works on a point or an array of points)."""
    p = np.asarray(p)
    return p[..., :-1]


def projected(sampler: TripleSampler, d: int, ts: tuple[float, float, float], name: str) -> TripleSampler:
    def draw(rng, size):
        X, Y, Z = sampler.draw(rng, size)
        return project_forget_last(X), project_forget_last(Y), project_forget_last(Z)

    targets = tuple(ProjectedSliceRegion(d, t) for t in ts)
    return TripleSampler(sampler.dim - 1, draw, targets, name, sampler.info)


def bbd_sampler(d: int) -> TripleSampler:
    """Coupling of uniforms on the projected slices at levels u, u, 2u."""
    if d == 3:
        return d3_bbd_sampler()
    u = optimal_threshold(d).u_float
    if d == 4:
        return projected(chain_sampler_d4(u, u, 2 * u), 4, (u, u, 2 * u), "bbd4")
    if d == 5:
        return projected(chain_sampler_d5(), 5, (u, u, 2 * u), "bbd5")
    raise ValueError("invalid-argument: d must be 3, 4 or 5")


# ----------------------------------------------------------------------------
# discrete compatibility LP


@dataclass(frozen=True)
class GridDensity:
    """Point masses at (start + i) h, i = 0..len(masses)-1."""

    h: float
    start: int
    masses: tuple

    @property
    def values(self) -> np.ndarray:
        return (self.start + np.arange(len(self.masses))) * self.h

    def total(self):
        return sum(self.masses)

    def as_array(self) -> np.ndarray:
        return np.array([float(m) for m in self.masses])

    @classmethod
    def from_density(cls, p: PiecewisePolynomial, h: float) -> "GridDensity":
        """Hat-function discretization: preserves total mass and mean exactly."""
        return cls(h, *hat_masses(p, h))


def hat_masses(p: PiecewisePolynomial, h: float) -> tuple[int, tuple]:
    lo, hi = float(p.domain[0]), float(p.domain[1])
    start = math.floor(lo / h + 1e-9)
    stop = math.ceil(hi / h - 1e-9)
    nodes = h * np.arange(start - 1, stop + 2)
    first = PiecewisePolynomial(p.breakpoints, tuple(poly_mul(q, (Fraction(0), Fraction(1))) for q in p.pieces))
    G0 = p.grid_masses(nodes).cumsum()
    G1 = first.grid_masses(nodes).cumsum()
    G0 = np.concatenate([[0.0], G0])
    G1 = np.concatenate([[0.0], G1])
    out = []
    for i in range(1, len(nodes) - 1):
        left, mid, right = nodes[i - 1], nodes[i], nodes[i + 1]
        up = (G1[i] - G1[i - 1]) - left * (G0[i] - G0[i - 1])
        down = right * (G0[i + 1] - G0[i]) - (G1[i + 1] - G1[i])
        out.append(max((up + down) / h, 0.0))
    m = np.array(out)
    return start, tuple(m / m.sum())


@dataclass(frozen=True)
class DiscreteCoupling:
    """Masses m(i, j) on x = (s1 + i) h, y = (s2 + j) h; z = x + y."""

    h: float
    starts: tuple[int, int, int]
    I: np.ndarray
    J: np.ndarray
    M: tuple
    marginals: tuple[GridDensity, GridDensity, GridDensity]
    exact: bool = False

    def residual(self) -> float:
        """Largest deviation of the row, column and antidiagonal sums from the marginals."""
        mu1, mu2, mu3 = (g.as_array() for g in self.marginals)
        M = np.array([float(m) for m in self.M])
        off = self.starts[0] + self.starts[1] - self.starts[2]
        r1 = np.bincount(self.I, M, len(mu1)) - mu1
        r2 = np.bincount(self.J, M, len(mu2)) - mu2
        K = self.I + self.J + off
        r3 = np.bincount(K, M, len(mu3)) - mu3
        return float(max(np.abs(r1).max(), np.abs(r2).max(), np.abs(r3).max()))

    def exact_residual_zero(self) -> bool:
        if not self.exact:
            return False
        mu = [g.masses for g in self.marginals]
        off = self.starts[0] + self.starts[1] - self.starts[2]
        sums = [dict(), dict(), dict()]
        for i, j, m in zip(self.I, self.J, self.M):
            for s, key in zip(sums, (int(i), int(j), int(i + j + off))):
                s[key] = s.get(key, Fraction(0)) + m
        return all(s.get(k, 0) == Fraction(v) for s, vec in zip(sums, mu) for k, v in enumerate(vec))

    def probabilities(self) -> np.ndarray:
        M = np.clip(np.array([float(m) for m in self.M]), 0, None)
        return M / M.sum()

    def to_json(self) -> dict:
        return {
            "h": self.h,
            "starts": list(self.starts),
            "entries": [
                [int(i), int(j), Fraction(m).numerator, Fraction(m).denominator] for i, j, m in zip(self.I, self.J, self.M)
            ],
            "marginals": [[float(m) for m in g.masses] for g in self.marginals],
        }


@dataclass(frozen=True)
class Infeasible:
    """Dual ray y = (y1, y2, y3) with y1_i + y2_j + y3_{i+j} >= 0 on every cell and y.mu < 0."""

    y: tuple[np.ndarray, np.ndarray, np.ndarray]
    value: float
    verified: bool
    exact: bool


def compatibility_lp(mu1: GridDensity, mu2: GridDensity, mu3: GridDensity, exact: bool | None = None):
    """Find m(i, j) >= 0 whose row, column and antidiagonal sums are mu1, mu2, mu3."""
    if not (mu1.h == mu2.h == mu3.h):
        raise ValueError("invalid-argument: grids must share the resolution h")
    totals = [float(g.total()) for g in (mu1, mu2, mu3)]
    if max(totals) - min(totals) > 1e-9:
        raise ValueError(f"invalid-argument: marginal masses differ {totals}")
    off = mu1.start + mu2.start - mu3.start
    a1, a2, a3 = (g.as_array() for g in (mu1, mu2, mu3))
    N1, N2, N3 = len(a1), len(a2), len(a3)
    I, J = np.meshgrid(np.arange(N1), np.arange(N2), indexing="ij")
    K = I + J + off
    keep = (K >= 0) & (K < N3)
    keep &= (a1[I] > 0) & (a2[J] > 0)
    keep &= np.where(keep, a3[np.clip(K, 0, N3 - 1)] > 0, False)
    I, J, K = I[keep], J[keep], K[keep]
    nv = len(I)
    all_rational = all(isinstance(m, (int, Fraction)) for g in (mu1, mu2, mu3) for m in g.masses)
    if exact is None:
        exact = all_rational and nv <= LP_VARIABLE_CAP
    if exact:
        return _compat_exact(mu1, mu2, mu3, I, J, K)
    return _compat_highs(mu1, mu2, mu3, I, J, K, a1, a2, a3)


def _compat_exact(mu1, mu2, mu3, I, J, K):
    sizes = [len(mu1.masses), len(mu2.masses), len(mu3.masses)]
    rows: list[dict[int, Fraction]] = [dict() for _ in range(sum(sizes))]
    for v, (i, j, k) in enumerate(zip(I, J, K)):
        rows[i][v] = Fraction(1)
        rows[sizes[0] + j][v] = Fraction(1)
        rows[sizes[0] + sizes[1] + k][v] = Fraction(1)
    rhs = [Fraction(m) for g in (mu1, mu2, mu3) for m in g.masses]
    lp = RationalLP(len(I), [Fraction(0)] * len(I), eq_rows=rows, eq_rhs=rhs)
    res = exact_simplex(lp)
    if res.status == "infeasible":
        y = res.farkas_eq
        parts = (np.array(y[: sizes[0]]), np.array(y[sizes[0] : sizes[0] + sizes[1]]), np.array(y[sizes[0] + sizes[1] :]))
        value = float(sum(a * b for a, b in zip(y, rhs)))
        return Infeasible(parts, value, verify_farkas(lp, res), True)
    nz = [v for v, m in enumerate(res.x) if m != 0]
    return DiscreteCoupling(
        mu1.h,
        (mu1.start, mu2.start, mu3.start),
        np.array([I[v] for v in nz], dtype=np.int64),
        np.array([J[v] for v in nz], dtype=np.int64),
        tuple(res.x[v] for v in nz),
        (mu1, mu2, mu3),
        exact=True,
    )


def _incidence(I, J, K, N1, N2, N3):
    nv = len(I)
    rows = np.concatenate([I, N1 + J, N1 + N2 + K])
    cols = np.tile(np.arange(nv), 3)
    return coo_matrix((np.ones(3 * nv), (rows, cols)), shape=(N1 + N2 + N3, nv)).tocsr()


def _compat_highs(mu1, mu2, mu3, I, J, K, a1, a2, a3):
    N1, N2, N3 = len(a1), len(a2), len(a3)
    A = _incidence(I, J, K, N1, N2, N3)
    b = np.concatenate([a1, a2, a3])
    opts = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}
    if len(I):
        res = linprog(np.zeros(len(I)), A_eq=A, b_eq=b, bounds=(0, None), method="highs", options=opts)
        status = res.status
    else:
        status = 2
    if status == 0:
        x = np.clip(res.x, 0, None)
        nz = np.nonzero(x > 0)[0]
        out = DiscreteCoupling(
            mu1.h, (mu1.start, mu2.start, mu3.start), I[nz], J[nz], tuple(x[nz]), (mu1, mu2, mu3)
        )
        if out.residual() <= 1e-9:
            return out
    # Farkas ray: minimize b.y subject to A^T y >= 0, -1 <= y <= 1
    ray = linprog(b, A_ub=-A.T if len(I) else None, b_ub=np.zeros(len(I)) if len(I) else None, bounds=(-1, 1), method="highs")
    y = ray.x
    col_min = float((A.T @ y).min()) if len(I) else 0.0
    value = float(b @ y)
    verified = col_min >= -1e-12 and value < -1e-9
    return Infeasible((y[:N1], y[N1 : N1 + N2], y[N1 + N2 :]), value, verified, False)


def sample_coupling(c: DiscreteCoupling, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw (x, y) from the coupling with triangular jitter of half-width h on each node."""
    p = c.probabilities()
    k = rng.choice(len(p), size=size, p=p)
    h = c.h
    x = (c.starts[0] + c.I[k]) * h + (rng.random(size) + rng.random(size) - 1) * h
    y = (c.starts[1] + c.J[k]) * h + (rng.random(size) + rng.random(size) - 1) * h
    return x, y


# ----------------------------------------------------------------------------
# two-dimensional slices


def _seg_len(t: np.ndarray) -> np.ndarray:
    return np.minimum(t, 2 - t)


def p2_draw(a: np.ndarray, b: np.ndarray, rng: np.random.Generator):
    """Vectorized coupling of uniforms on the 2-D slices at levels a, b, a+b.

    Three centred uniforms A, B, C of lengths l_a, l_b, l_c with A+B+C = 0:
    the triple lives on the boundary of the triangle with vertices P1, P2, P3
    in the plane A+B+C=0, with edge weights chosen so each coordinate is
    uniform (this needs the triangle inequality on the lengths).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    size = a.shape[0]
    l1, l2, l3 = _seg_len(a), _seg_len(b), _seg_len(a + b)
    l1, l2, l3 = (np.clip(v, 0, None) for v in (l1, l2, l3))
    x = np.clip((l2 + l3 - l1) / 2, 0, None)
    y = np.clip((l1 - l2 + l3) / 2, 0, None)
    z = np.clip((l1 + l2 - l3) / 2, 0, None)
    P1 = np.column_stack([-l1 / 2, l2 / 2])
    P2 = np.column_stack([(l2 - l3) / 2, -l2 / 2])
    P3 = np.column_stack([l1 / 2, (l3 - l1) / 2])
    W = np.column_stack([z * x, y * x, z * y])
    tot = W.sum(axis=1)
    dead = tot <= 1e-300
    if np.any(dead):
        pick = np.argmin(np.column_stack([l3, l2, l1]), axis=1)
        W[dead] = np.eye(3)[pick[dead]]
        tot = W.sum(axis=1)
    cum = np.cumsum(W / tot[:, None], axis=1)
    r = rng.random(size)
    edge = (r[:, None] > cum).sum(axis=1).clip(0, 2)
    S = np.where((edge == 1)[:, None], P2, P1)
    E = np.where((edge == 0)[:, None], P2, P3)
    s = rng.random(size)[:, None]
    AB = S + s * (E - S)
    A, B = AB[:, 0], AB[:, 1]
    X = np.column_stack([a / 2 - A, a / 2 + A])
    Y = np.column_stack([b / 2 - B, b / 2 + B])
    return X, Y, X + Y


def p2_slice_sampler(a: float, b: float, c: float) -> TripleSampler:
    if abs(a + b - c) > SUM_TOL or min(a, b, c) < -SUM_TOL or max(a, b, c) > 2 + SUM_TOL:
        raise ValueError("invalid-argument: need a + b = c with a, b, c in [0, 2]")

    def draw(rng, size):
        return p2_draw(np.full(size, a), np.full(size, b), rng)

    return TripleSampler(2, draw, (SliceRegion(2, a), SliceRegion(2, b), SliceRegion(2, c)), "p2")


# ----------------------------------------------------------------------------
# four- and five-dimensional chains


def _snap(x: float) -> Fraction:
    return Fraction(x).limit_denominator(10**9)


@lru_cache(maxsize=4096)
def pair_sum_coupling(a: Fraction, b: Fraction, h: float) -> DiscreteCoupling:
    """LP coupling of the centred pair-sum laws at a, b and a+b (sum of the first two is the third)."""
    g1 = GridDensity.from_density(centered_density(2, a), h)
    g2 = GridDensity.from_density(centered_density(2, b), h)
    g3 = GridDensity.from_density(centered_density(2, a + b), h)
    out = compatibility_lp(g1, g2, g3, exact=False)
    if isinstance(out, Infeasible):
        raise InternalError(f"internal-error: pair-sum LP infeasible at a={float(a)}, b={float(b)}, h={h}")
    return out


def _check_d4_args(a: float, b: float, c: float) -> None:
    if abs(a + b - c) > SUM_TOL:
        raise ValueError("invalid-argument: need a + b = c")
    for v, label in ((a, "a"), (b, "b"), (4 - c, "4 - c")):
        if not 0.4 - SUM_TOL <= v <= 1.8 + SUM_TOL:
            raise ValueError(f"invalid-argument: {label} = {v} outside [0.4, 1.8]")


def _pair_support(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.maximum(0, t - 2), np.minimum(t, 2)


def _chain4_from_pairs(a, b, alpha, beta, rng):
    """Lift pair sums to points of the 4-D slices via two independent 2-D couplings."""
    X1, Y1, _ = p2_draw(alpha, beta, rng)
    X2, Y2, _ = p2_draw(a - alpha, b - beta, rng)
    X = np.column_stack([X1, X2])
    Y = np.column_stack([Y1, Y2])
    return X, Y, X + Y


def _pairs_ok(a, b, alpha, beta, tol=0.0):
    ok = np.ones(len(alpha), dtype=bool)
    for t, s in ((a, alpha), (b, beta), (a + b, alpha + beta)):
        lo, hi = _pair_support(t)
        ok &= (s >= lo - tol) & (s <= hi + tol)
    return ok


def chain_sampler_d4(a: float, b: float, c: float, h: float = DEFAULT_H) -> TripleSampler:
    """Coupling of uniforms on the 4-D slices at a, b, c = a + b."""
    _check_d4_args(a, b, c)
    coupling = pair_sum_coupling(_snap(a), _snap(b), h)

    def draw(rng, size):
        out_a = np.empty(0)
        out_b = np.empty(0)
        while len(out_a) < size:
            A, B = sample_coupling(coupling, rng, size)
            alpha, beta = a / 2 + A, b / 2 + B
            keep = _pairs_ok(np.full(size, a), np.full(size, b), alpha, beta)
            out_a = np.concatenate([out_a, alpha[keep]])
            out_b = np.concatenate([out_b, beta[keep]])
        return _chain4_from_pairs(np.full(size, a), np.full(size, b), out_a[:size], out_b[:size], rng)

    targets = (SliceRegion(4, a), SliceRegion(4, b), SliceRegion(4, c))
    return TripleSampler(4, draw, targets, "chain4", {"coupling_residual": coupling.residual(), "h": h})


def first_coordinate_spec(u: float) -> MixabilitySpec:
    """Decreasing densities whose joint mixability gives the last-coordinate coupling in dimension five."""
    uq = _snap(u)
    f = conditional_sum_density(1, 5, uq)
    g = conditional_sum_density(1, 5, 2 * uq).compose_affine(-1, 1)
    return MixabilitySpec((f, f, g))


@lru_cache(maxsize=8)
def first_coordinate_coupling(h: float) -> DiscreteCoupling:
    u = optimal_threshold(5).u_float
    uq = _snap(u)
    f = GridDensity.from_density(conditional_sum_density(1, 5, uq), h)
    g = GridDensity.from_density(conditional_sum_density(1, 5, 2 * uq), h)
    out = compatibility_lp(f, f, g, exact=False)
    if isinstance(out, Infeasible):
        raise InternalError("internal-error: first-coordinate LP infeasible")
    return out


def chain_sampler_d5(h: float = DEFAULT_H, inner_h: float = INNER_H) -> TripleSampler:
    """Coupling of uniforms on the 5-D slices at u, u, 2u.

    The last coordinates come from the first-coordinate LP; the remaining four
    use the pair-sum LP at the node parameters (on a grid of step inner_h)
    shifted to the realized parameters.
    """
    u = optimal_threshold(5).u_float
    if not (u <= 2 and 3 <= 2 * u <= 5):
        raise InternalError("internal-error: threshold outside the chain's hypotheses")
    report = check_ww(first_coordinate_spec(u), 1)
    if not report.passed:
        raise InternalError(f"internal-error: decreasing-density mixability fails {report.margins}")
    for v in (u - 1, u, 4 - 2 * u, 5 - 2 * u):
        if not 0.4 <= v <= 1.8:
            raise InternalError("internal-error: remaining parameters leave [0.4, 1.8]")
    outer = first_coordinate_coupling(h)

    def draw(rng, size):
        chunks = []
        have = 0
        while have < size:
            x5, y5 = sample_coupling(outer, rng, size)
            z5 = x5 + y5
            ok = (x5 >= 0) & (x5 <= 1) & (y5 >= 0) & (y5 <= 1) & (z5 <= 1)
            x5, y5 = x5[ok], y5[ok]
            a, b = u - x5, u - y5
            ka = np.round(a / inner_h).astype(np.int64)
            kb = np.round(b / inner_h).astype(np.int64)
            alpha = np.empty(len(a))
            beta = np.empty(len(a))
            keys = ka * 100003 + kb
            for key in np.unique(keys):
                sel = keys == key
                ia, ib = int(ka[sel][0]), int(kb[sel][0])
                cp = pair_sum_coupling(Fraction(ia) * _snap(inner_h), Fraction(ib) * _snap(inner_h), inner_h)
                A, B = sample_coupling(cp, rng, int(sel.sum()))
                alpha[sel] = a[sel] / 2 + A
                beta[sel] = b[sel] / 2 + B
            keep = _pairs_ok(a, b, alpha, beta)
            X4, Y4, _ = _chain4_from_pairs(a[keep], b[keep], alpha[keep], beta[keep], rng)
            X = np.column_stack([X4, x5[keep]])
            Y = np.column_stack([Y4, y5[keep]])
            chunks.append((X, Y))
            have += len(X)
        X = np.concatenate([c[0] for c in chunks])[:size]
        Y = np.concatenate([c[1] for c in chunks])[:size]
        return X, Y, X + Y

    targets = (SliceRegion(5, u), SliceRegion(5, u), SliceRegion(5, 2 * u))
    return TripleSampler(5, draw, targets, "chain5", {"outer_residual": outer.residual(), "h": h, "inner_h": inner_h})


# ----------------------------------------------------------------------------
# leftover simplices


def leftover_tables(d: int) -> dict:
    """(t, v) parameters of the leftover simplices; the second triple is absent for d = 3."""
    u = optimal_threshold(d).u_float
    w = u - 1
    if d == 3:
        return {
            "X1": (0.0, (w, 0.0)),
            "Y1": ((3 * u - 1) / 2, (w, 1.0)),
            "Z1": ((3 * u - 1) / 2, (2 * w, 1.0)),
        }
    if d == 4:
        return {
            "X1": (0.0, (w, 0.0, 0.0)),
            "Y1": (u + 2 / 15, (0.0, 1.0, w)),
            "Z1": (u + 2 / 15, (w, 1.0, w)),
            "X2": (1.5, (w, 0.0, 1.0)),
            "Y2": (1.5, (w, 1.0, 0.0)),
            "Z2": (3.0, (2 * w, 1.0, 1.0)),
        }
    if d == 5:
        return {
            "X1": (0.0, (w, 0.0, 0.0, 0.0)),
            "Y1": (u + 0.25, (0.0, 1.0, 0.0, w)),
            "Z1": (u + 0.25, (w, 1.0, 0.0, w)),
            "X2": (2.0, (2 * u - 3, 0.0, 1.0, 2 - u)),
            "Y2": (2.0, (0.0, 1.0, 0.0, w)),
            "Z2": (4.0, (2 * u - 3, 1.0, 1.0, 1.0)),
        }
    raise ValueError("invalid-argument: d must be 3, 4 or 5")


def leftover_report(d: int) -> dict:
    """Containment, disjointness and volume-ratio checks for the leftover simplices."""
    u = optimal_threshold(d).u_float
    tab = leftover_tables(d)
    m = d - 1
    simp = {k: sigma_simplex(m, t, v) for k, (t, v) in tab.items()}
    vol = {k: simplex_volume(s) for k, s in simp.items()}
    levels = {k: (min(t, sum(v)), max(t, sum(v))) for k, (t, v) in tab.items()}
    c_lo, c_hi = u, 2 * u - 1
    checks = []

    def add(name, ok, detail):
        checks.append({"check": name, "ok": bool(ok), "detail": detail})

    for k in ("Y1", "Z1", "X2", "Y2"):
        if k not in tab:
            continue
        lo, hi = levels[k]
        inside = lo >= c_lo - 1e-12 and hi <= c_hi + 1e-12
        box = bool(np.all(simp[k].vertices >= -1e-12) and np.all(simp[k].vertices <= 1 + 1e-12))
        add(f"{k} in C", inside and box, {"levels": [lo, hi], "C": [c_lo, c_hi]})
    zlo, zhi = levels["Z1"]
    for k in ("Y1", "X2", "Y2"):
        if k not in tab:
            continue
        lo, hi = levels[k]
        add(f"Z1 disjoint {k}", hi <= zlo + 1e-12 or lo >= zhi - 1e-12, {"Z1": [zlo, zhi], k: [lo, hi]})
    ratios = {"X1/Z1": vol["X1"] / vol["Z1"], "X1/Y1": vol["X1"] / vol["Y1"]}
    add("X1/Z1 < 1", ratios["X1/Z1"] < 1, ratios["X1/Z1"])
    if d == 3:
        add("X1/Y1 < 1", ratios["X1/Y1"] < 1, ratios["X1/Y1"])
    else:
        ratios["Z2/X2"] = vol["Z2"] / vol["X2"]
        ratios["Z2/Y2"] = vol["Z2"] / vol["Y2"]
        tail = ratios["X1/Y1"] + ratios["Z2/X2"] + ratios["Z2/Y2"]
        ratios["last_three_sum"] = tail
        add("last three sum < 1", tail < 1, tail)
    return {"d": d, "u": u, "volumes": vol, "levels": levels, "ratios": ratios, "checks": checks,
            "ok": all(c["ok"] for c in checks), "simplices": simp}


def leftover_samplers(d: int, strict: bool = True):
    """(A x C x C sampler, C x C x E sampler or None)."""
    rep = leftover_report(d)
    if strict and not rep["ok"]:
        bad = [c for c in rep["checks"] if not c["ok"]]
        raise ConstructionInvalid(f"construction-invalid: {bad}")
    tab = leftover_tables(d)
    first = simplex_triple_sampler(*tab["X1"], *tab["Y1"], *tab["Z1"])
    second = None if d == 3 else simplex_triple_sampler(*tab["X2"], *tab["Y2"], *tab["Z2"])
    return first, second


def proportional_volume_form(t: float, v) -> float:
    """|t - 1.v| * |v - sigma(v)|^(m-1); a fixed multiple of the simplex volume only for m <= 3."""
    v = np.asarray(v, dtype=float)
    m = len(v)
    return abs(t - v.sum()) * float(np.linalg.norm(v - cyclic_shift(v))) ** (m - 1)


# ----------------------------------------------------------------------------
# reporting


def sampler_report(s: TripleSampler, samples: int, rng: np.random.Generator, bins: int = 50, chunk: int = 250_000) -> dict:
    """Sum residual, region violations and binned marginal TV of a sampler."""
    Xs, Ys, Zs = [], [], []
    left = samples
    while left > 0:
        k = min(chunk, left)
        X, Y, Z = s.draw(rng, k)
        Xs.append(X)
        Ys.append(Y)
        Zs.append(Z)
        left -= k
    X, Y, Z = np.concatenate(Xs), np.concatenate(Ys), np.concatenate(Zs)
    residual = float(np.abs(X + Y - Z).max())
    out = {"name": s.name, "samples": samples, "max_sum_residual": residual, "violations": [], "tv": []}
    for P, region in zip((X, Y, Z), s.targets):
        out["violations"].append(int((~region.contains(P, 1e-12)).sum()))
        out["tv"].append(region_tv(region, P, bins))
    out["max_tv"] = max((v for t in out["tv"] for v in t.values()), default=0.0)
    return out


def sampler_by_kind(kind: str, d: int = 3) -> TripleSampler:
    if kind.startswith("bbd"):
        return bbd_sampler(int(kind[3:]))
    if kind == "acc":
        return leftover_samplers(d, strict=False)[0]
    if kind == "cce":
        second = leftover_samplers(d, strict=False)[1]
        if second is None:
            raise ValueError("invalid-argument: no C x C x E sampler for d = 3")
        return second
    raise ValueError(f"invalid-argument: unknown sampler kind {kind}")
