"""Exact oracles: maximum sum-free subsets, the fractional relaxation, and an
exact rational simplex with optimality and infeasibility certificates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lattice import LatticeSet, build_optimal_set, fiber_counts, is_sum_free

LP_VARIABLE_CAP = 400


class BudgetExceeded(RuntimeError):
    def __init__(self, best: int, bound: int, witness):
        super().__init__(f"budget-exceeded: best {best}, bound {bound}")
        self.best = best
        self.bound = bound
        self.witness = witness


# ----------------------------------------------------------------------------
# exact simplex


@dataclass
class RationalLP:
    """maximize c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  0 <= x <= upper.

    Rows are sparse dicts {column: coefficient}; ``upper`` entries may be None.
    """

    n_vars: int
    objective: list[Fraction]
    ub_rows: list[dict[int, Fraction]] = field(default_factory=list)
    ub_rhs: list[Fraction] = field(default_factory=list)
    eq_rows: list[dict[int, Fraction]] = field(default_factory=list)
    eq_rhs: list[Fraction] = field(default_factory=list)
    upper: list[Fraction | None] | None = None

    def __post_init__(self):
        if len(self.objective) != self.n_vars:
            raise ValueError("objective length mismatch")
        if len(self.ub_rows) != len(self.ub_rhs) or len(self.eq_rows) != len(self.eq_rhs):
            raise ValueError("row/rhs length mismatch")
        if self.upper is not None and len(self.upper) != self.n_vars:
            raise ValueError("upper bound length mismatch")

    def all_ub_rows(self) -> tuple[list[dict[int, Fraction]], list[Fraction]]:
        rows, rhs = list(self.ub_rows), list(self.ub_rhs)
        if self.upper is not None:
            for j, u in enumerate(self.upper):
                if u is not None:
                    rows.append({j: Fraction(1)})
                    rhs.append(Fraction(u))
        return rows, rhs


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Fraction | None = None
    x: list[Fraction] | None = None
    y_ub: list[Fraction] | None = None  # duals of ub rows then upper-bound rows
    y_eq: list[Fraction] | None = None
    farkas_ub: list[Fraction] | None = None
    farkas_eq: list[Fraction] | None = None
    pivots: int = 0


def exact_simplex(lp: RationalLP) -> LPResult:
    """Two-phase tableau simplex over Fractions with Bland's rule."""
    ub_rows, ub_rhs = lp.all_ub_rows()
    m_ub, m_eq, n = len(ub_rows), len(lp.eq_rows), lp.n_vars
    m = m_ub + m_eq
    # columns: x (n), slacks (m_ub), artificials (added per row as needed)
    rows: list[dict[int, Fraction]] = []
    rhs: list[Fraction] = []
    sign: list[int] = []
    for r, b in zip(ub_rows, ub_rhs):
        row = {j: Fraction(v) for j, v in r.items() if v != 0}
        row[n + len(rows)] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(b))
        sign.append(1)
    for r, b in zip(lp.eq_rows, lp.eq_rhs):
        rows.append({j: Fraction(v) for j, v in r.items() if v != 0})
        rhs.append(Fraction(b))
        sign.append(1)
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = {j: -v for j, v in rows[i].items()}
            rhs[i] = -rhs[i]
            sign[i] = -1
    n_struct = n + m_ub
    basis: list[int] = []
    art_cols = []
    for i in range(m):
        slack = n + i if i < m_ub else None
        if slack is not None and rows[i].get(slack) == 1:
            basis.append(slack)
        else:
            col = n_struct + len(art_cols)
            art_cols.append(col)
            rows[i][col] = Fraction(1)
            basis.append(col)
    n_total = n_struct + len(art_cols)
    tab = _Tableau(rows, rhs, basis, n_total)
    pivots = 0
    if art_cols:
        cost = {c: Fraction(-1) for c in art_cols}  # maximize -sum(artificials)
        pivots += tab.optimize(cost, allowed=range(n_total))
        phase1 = tab.objective_value(cost)
        if phase1 < 0:
            y = tab.duals(cost)
            # Farkas ray on the original rows: y_ub >= 0, A^T y >= 0, b^T y < 0
            fy = [yi * s for yi, s in zip(y, sign)]
            res = LPResult("infeasible", pivots=pivots)
            res.farkas_ub = fy[:m_ub]
            res.farkas_eq = fy[m_ub:]
            return res
        tab.drive_out(set(art_cols), n_struct)
    cost = {j: Fraction(c) for j, c in enumerate(lp.objective) if c != 0}
    status = tab.optimize(cost, allowed=range(n_struct), detect_unbounded=True)
    if status is None:
        return LPResult("unbounded", pivots=pivots)
    pivots += status
    x = [Fraction(0)] * n_total
    for i, b in enumerate(tab.basis):
        x[b] = tab.rhs[i]
    y = tab.duals(cost)
    y = [yi * s for yi, s in zip(y, sign)]
    value = sum((Fraction(c) * x[j] for j, c in enumerate(lp.objective)), Fraction(0))
    return LPResult("optimal", value, x[:n], y[:m_ub], y[m_ub:], pivots=pivots)


class _Tableau:
    def __init__(self, rows, rhs, basis, n_cols):
        self.start_cols = list(basis)
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.n_cols = n_cols
        # canonicalise: each basic column must be a unit vector
        for i, b in enumerate(basis):
            self._pivot(i, b)
        self.banned: set[int] = set()

    def _pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        piv = row[col]
        if piv != 1:
            inv = 1 / piv
            row = {j: v * inv for j, v in row.items()}
            self.rows[r] = row
            self.rhs[r] = self.rhs[r] * inv
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other.get(col)
            if not f:
                continue
            for j, v in row.items():
                nv = other.get(j, 0) - f * v
                if nv:
                    other[j] = nv
                else:
                    other.pop(j, None)
            self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = col

    def reduced_costs(self, cost: dict[int, Fraction], allowed) -> dict[int, Fraction]:
        rc = {j: cost.get(j, Fraction(0)) for j in allowed if j not in self.banned}
        for i, b in enumerate(self.basis):
            cb = cost.get(b, 0)
            if not cb:
                continue
            for j, v in self.rows[i].items():
                if j in rc:
                    rc[j] -= cb * v
        return rc

    def optimize(self, cost, allowed, detect_unbounded=False):
        allowed = list(allowed)
        pivots = 0
        while True:
            rc = self.reduced_costs(cost, allowed)
            basic = set(self.basis)
            enter = None
            for j in sorted(rc):
                if j not in basic and rc[j] > 0:
                    enter = j
                    break
            if enter is None:
                return pivots
            best = None
            for i, row in enumerate(self.rows):
                a = row.get(enter)
                if a is not None and a > 0:
                    ratio = self.rhs[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                if detect_unbounded:
                    return None
                raise RuntimeError("unbounded phase-one problem")
            self._pivot(best[1], enter)
            pivots += 1

    def objective_value(self, cost) -> Fraction:
        return sum((cost.get(b, 0) * self.rhs[i] for i, b in enumerate(self.basis)), Fraction(0))

    def duals(self, cost) -> list[Fraction]:
        """y = c_B B^{-1}, read off from the columns that started as the identity."""
        return _solve_duals(self, cost)

    def drive_out(self, artificial: set[int], n_struct: int) -> None:
        """Pivot artificial variables out of the basis (degenerate pivots)."""
        for i, b in enumerate(list(self.basis)):
            if b not in artificial:
                continue
            for j in sorted(self.rows[i]):
                if j < n_struct and self.rows[i][j] != 0:
                    self._pivot(i, j)
                    break
        self.banned |= artificial


def _solve_duals(tab: _Tableau, cost) -> list[Fraction]:
    # The starting tableau had a unit column for every row (slack or
    # artificial).  After pivoting, the entries of the current tableau in those
    # columns form B^{-1}; y_i = sum_k c_{B_k} (B^{-1})_{k,i}.
    start_cols = tab.start_cols
    m = len(tab.rows)
    y = [Fraction(0)] * m
    for k, b in enumerate(tab.basis):
        cb = cost.get(b, 0)
        if not cb:
            continue
        row = tab.rows[k]
        for i, col in enumerate(start_cols):
            v = row.get(col)
            if v:
                y[i] += cb * v
    return y


def verify_optimality(lp: RationalLP, res: LPResult) -> bool:
    """Exact primal feasibility, dual feasibility and zero duality gap."""
    if res.status != "optimal":
        return False
    ub_rows, ub_rhs = lp.all_ub_rows()
    x = res.x
    if any(v < 0 for v in x):
        return False
    for r, b in zip(ub_rows, ub_rhs):
        if sum(Fraction(v) * x[j] for j, v in r.items()) > b:
            return False
    for r, b in zip(lp.eq_rows, lp.eq_rhs):
        if sum(Fraction(v) * x[j] for j, v in r.items()) != b:
            return False
    if any(v < 0 for v in res.y_ub):
        return False
    # A^T y >= c componentwise (x >= 0 columns)
    col = [Fraction(0)] * lp.n_vars
    for yi, r in zip(res.y_ub, ub_rows):
        for j, v in r.items():
            col[j] += yi * v
    for yi, r in zip(res.y_eq, lp.eq_rows):
        for j, v in r.items():
            col[j] += yi * v
    if any(col[j] < Fraction(lp.objective[j]) for j in range(lp.n_vars)):
        return False
    dual_value = sum((yi * b for yi, b in zip(res.y_ub, ub_rhs)), Fraction(0)) + sum(
        (yi * b for yi, b in zip(res.y_eq, lp.eq_rhs)), Fraction(0)
    )
    primal_value = sum((Fraction(c) * x[j] for j, c in enumerate(lp.objective)), Fraction(0))
    return dual_value == primal_value == res.value


def verify_farkas(lp: RationalLP, res: LPResult) -> bool:
    """Check y_ub >= 0, A^T y >= 0 on every column and b^T y < 0 (no x >= 0 exists)."""
    if res.status != "infeasible":
        return False
    ub_rows, ub_rhs = lp.all_ub_rows()
    if any(v < 0 for v in res.farkas_ub):
        return False
    col = [Fraction(0)] * lp.n_vars
    for yi, r in zip(res.farkas_ub, ub_rows):
        for j, v in r.items():
            col[j] += yi * v
    for yi, r in zip(res.farkas_eq, lp.eq_rows):
        for j, v in r.items():
            col[j] += yi * v
    if any(v < 0 for v in col):
        return False
    total = sum((yi * b for yi, b in zip(res.farkas_ub, ub_rhs)), Fraction(0)) + sum(
        (yi * b for yi, b in zip(res.farkas_eq, lp.eq_rhs)), Fraction(0)
    )
    return total < 0


# ----------------------------------------------------------------------------
# sum-free triples on [n]^d


def grid_points(d: int, n: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(1, n + 1), repeat=d))


def sum_triples(d: int, n: int) -> list[tuple[int, int, int]]:
    """Index triples (i, j, k) with p_i + p_j = p_k, i <= j, over [n]^d."""
    pts = grid_points(d, n)
    index = {p: i for i, p in enumerate(pts)}
    out = []
    for i, p in enumerate(pts):
        for j in range(i, len(pts)):
            q = pts[j]
            z = tuple(a + b for a, b in zip(p, q))
            k = index.get(z)
            if k is not None:
                out.append((i, j, k))
    return out


def lp_relaxation(d: int, n: int) -> tuple[Fraction, list[Fraction], LPResult]:
    """Exact optimum of max sum g subject to g(x)+g(y)+g(z) <= 2 on x+y=z, 0<=g<=1."""
    nv = n**d
    if nv > LP_VARIABLE_CAP:
        raise ValueError(f"invalid-argument: LP has {nv} variables, cap is {LP_VARIABLE_CAP}")
    rows, rhs = [], []
    for i, j, k in sum_triples(d, n):
        row: dict[int, Fraction] = {}
        for idx in (i, j, k):
            row[idx] = row.get(idx, Fraction(0)) + 1
        rows.append(row)
        rhs.append(Fraction(2))
    lp = RationalLP(nv, [Fraction(1)] * nv, rows, rhs, upper=[Fraction(1)] * nv)
    res = exact_simplex(lp)
    if not verify_optimality(lp, res):
        raise RuntimeError("internal-error: LP certificate failed")
    return res.value, res.x, res


# ----------------------------------------------------------------------------
# maximum sum-free subsets


SEARCH_POINT_CAP = 36


def brute_force_max(d: int, n: int, budget_nodes: int = 10**7, method: str = "auto") -> tuple[int, LatticeSet]:
    """Exact maximum sum-free subset of [n]^d.

    ``method`` is "search" (hand-written branch and bound), "milp" (HiGHS) or
    "auto", which searches when n^d <= SEARCH_POINT_CAP and uses the MILP
    otherwise.
    """
    if d < 1 or n < 1:
        raise ValueError("invalid-argument: d and n must be positive")
    if method == "auto":
        method = "search" if n**d <= SEARCH_POINT_CAP else "milp"
    if method == "search":
        return search_max(d, n, budget_nodes)
    if method == "milp":
        return milp_max(d, n)
    raise ValueError("invalid-argument: method must be search, milp or auto")


def search_max(d: int, n: int, budget_nodes: int = 10**7) -> tuple[int, LatticeSet]:
    """Exact maximum sum-free subset of [n]^d by depth-first branch and bound.

    Points are visited by decreasing level so the first complete branch is the
    top slab; the bound is the current size plus the number of still-allowed
    points.  Raises BudgetExceeded when more than ``budget_nodes`` nodes are
    expanded.
    """
    pts = sorted(grid_points(d, n), key=lambda p: (-sum(p), p))
    N = len(pts)
    index = {p: i for i, p in enumerate(pts)}
    # conflicts[i][j] = bitmask of k with {i, j, k} a forbidden triple pattern
    add = [[index.get(tuple(a + b for a, b in zip(pts[i], pts[j]))) for j in range(N)] for i in range(N)]
    sub = [[index.get(tuple(a - b for a, b in zip(pts[i], pts[j]))) for j in range(N)] for i in range(N)]

    best_size = -1
    best_mask = 0
    nodes = 0

    def forbid(i: int, chosen: int) -> int:
        """Points that may no longer join once i is added to ``chosen``."""
        bad = 0
        k = add[i][i]
        if k is not None:
            bad |= 1 << k
        if pts[i] and all(c % 2 == 0 for c in pts[i]):
            half = index.get(tuple(c // 2 for c in pts[i]))
            if half is not None:
                bad |= 1 << half
        m = chosen
        while m:
            low = m & -m
            j = low.bit_length() - 1
            m ^= low
            for k in (add[i][j], sub[i][j], sub[j][i]):
                if k is not None:
                    bad |= 1 << k
        return bad

    def dfs(pos: int, chosen: int, size: int, allowed: int) -> None:
        nonlocal best_size, best_mask, nodes
        nodes += 1
        if nodes > budget_nodes:
            raise BudgetExceeded(best_size, size + bin(allowed).count("1"), best_mask)
        rest = allowed >> pos
        if size + bin(rest).count("1") <= best_size:
            return
        if rest == 0:
            if size > best_size:
                best_size, best_mask = size, chosen
            return
        i = pos + ((rest & -rest).bit_length() - 1)
        bit = 1 << i
        # include i
        bad = forbid(i, chosen)
        if not bad & (chosen | bit):
            dfs(i + 1, chosen | bit, size + 1, (allowed & ~bad) & ~bit)
        # exclude i
        dfs(i + 1, chosen, size, allowed & ~bit)

    dfs(0, 0, 0, (1 << N) - 1)
    members = [pts[i] for i in range(N) if best_mask >> i & 1]
    return best_size, LatticeSet.from_points(d, n, members)


def milp_max(d: int, n: int, time_limit: float = 600.0) -> tuple[int, LatticeSet]:
    """Maximum sum-free subset via the HiGHS mixed-integer solver (second route)."""
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix

    pts = grid_points(d, n)
    N = len(pts)
    triples = sum_triples(d, n)
    r, c, v = [], [], []
    for t, (i, j, k) in enumerate(triples):
        for idx in (i, j, k):
            r.append(t)
            c.append(idx)
            v.append(1.0)
    A = coo_matrix((v, (r, c)), shape=(len(triples), N)).tocsr()
    A.sum_duplicates()
    ub = np.array([2.0 if i != j else 1.0 + 1.0 for i, j, _ in triples])
    # for x + x = z the row reads 2 g(x) + g(z) <= 2, equivalent to g(x) + g(z) <= 1 on binaries
    res = milp(
        c=-np.ones(N),
        constraints=[LinearConstraint(A, -np.inf, ub)],
        integrality=np.ones(N),
        bounds=Bounds(0, 1),
        options={"time_limit": time_limit, "mip_rel_gap": 0.0},
    )
    if res.status != 0:
        raise RuntimeError(f"milp did not finish: {res.message}")
    chosen = [pts[i] for i in range(N) if res.x[i] > 0.5]
    S = LatticeSet.from_points(d, n, chosen)
    if is_sum_free(S) is not None:
        raise RuntimeError("internal-error: milp returned a non sum-free set")
    return len(S), S


# ----------------------------------------------------------------------------


def relaxation_witness_from_set(S: LatticeSet) -> tuple[list[Fraction], Fraction, dict]:
    """Fractional point g(v) = max(0, lambda(v)/n - 1/(3n)) for S in [n]^{d+1}.

    Returns g over [n]^d (row-major), its objective, and a report with the
    clamp credit and the exact feasibility check.
    """
    if is_sum_free(S) is not None:
        raise ValueError("invalid-argument: S is not sum-free")
    d, n = S.d - 1, S.n
    lam = fiber_counts(S)
    pts = grid_points(d, n)
    shift = Fraction(1, 3 * n)
    g, clamped = [], 0
    for p in pts:
        raw = Fraction(int(lam[p]), n) - shift
        if raw < 0:
            clamped += 1
        g.append(max(Fraction(0), raw))
    for i, j, k in sum_triples(d, n):
        if g[i] + g[j] + g[k] > 2:
            raise RuntimeError("internal-error: clamped witness infeasible")
    objective = sum(g, Fraction(0))
    baseline = Fraction(len(S), n) - Fraction(n ** (d - 1), 3) if d >= 1 else Fraction(len(S), n)
    report = {
        "objective": objective,
        "baseline": baseline,
        "clamped": clamped,
        "clamp_credit": clamped * shift,
        "feasible": True,
    }
    return g, objective, report


def sandwich(d: int, n: int) -> dict:
    """|S*| <= exact max <= LP optimum on one instance."""
    opt = len(build_optimal_set(d, n))
    bf, _ = brute_force_max(d, n)
    lp, _, _ = lp_relaxation(d, n)
    return {"d": d, "n": n, "optimal_set": opt, "brute_force": bf, "lp": lp, "ok": opt <= bf <= lp}
