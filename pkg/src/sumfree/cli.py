"""Command-line entry point: ``sumfree <command> [options]``.

Exit status is 0 on success, 1 when a verification fails and 2 on a usage
error.  Reports are JSON with sorted keys; exact rationals appear as "p/q"
strings next to a float rendering.  Point sets are always written as CSV.
"""

from __future__ import annotations

import csv
import functools
import io
import re
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import __version__
from .streams import SEED_ENV, named_rng, root_seed


class VerificationFailure(Exception):
    """Raised by a command whose check failed; carries the report payload."""

    def __init__(self, message: str, payload: dict):
        super().__init__(message)
        self.payload = payload


@dataclass
class RunConfig:
    command: str
    seed: int
    threads: int
    fmt: str
    out: str | None
    tol: float
    params: dict = field(default_factory=dict)


# ----------------------------------------------------------------------------
# serialization


def rational(q) -> dict:
    q = Fraction(q)
    text = str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
    return {"exact": text, "float": float(q)}


def to_jsonable(obj):
    if isinstance(obj, Fraction):
        return rational(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if obj is None or isinstance(obj, (int, str)):
        return obj
    if hasattr(obj, "as_dict"):
        return to_jsonable(obj.as_dict())
    if hasattr(obj, "__dataclass_fields__"):
        return to_jsonable({k: getattr(obj, k) for k in obj.__dataclass_fields__ if not k.startswith("_")})
    return str(obj)


def versions() -> dict:
    import scipy

    return {"sumfree": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def make_report(cfg: RunConfig, result, elapsed: float) -> dict:
    return {
        "command": cfg.command,
        "params": to_jsonable(cfg.params),
        "seed": cfg.seed,
        "versions": versions(),
        "timing": {"seconds": round(elapsed, 6)},
        "result": to_jsonable(result),
    }


def _flatten(prefix: str, obj, rows: list):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, list) and obj and not isinstance(obj[0], (dict, list)):
        rows.append((prefix, ";".join(str(v) for v in obj)))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, obj))


def emit_report(report: dict, path: str | None, fmt: str) -> str:
    """Render a report as canonical JSON or key/value CSV and write it to ``path`` (stdout if None)."""
    if fmt == "json":
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    else:
        rows: list = []
        _flatten("", report, rows)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        writer.writerows(rows)
        text = buf.getvalue()
    _write(text, path)
    return text


def _write(text: str, path: str | None):
    if path is None or path == "-":
        click.echo(text, nl=False)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise click.ClickException(f"cannot write {path}: {exc}") from exc


def write_points_csv(points: np.ndarray, path: str | None, d: int, n: int):
    """One point per line after a ``# d=<d> n=<n>`` header."""
    buf = io.StringIO()
    buf.write(f"# d={d} n={n}\n")
    csv.writer(buf, lineterminator="\n").writerows(points.tolist())
    _write(buf.getvalue(), path)


def read_points_csv(path: str) -> tuple[np.ndarray, dict[str, int]]:
    """Points and the header fields (``d``, ``n``) of a point file.

    A plain column-name row is also accepted in place of the header.
    """
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise click.ClickException(f"cannot read {path}: {exc}") from exc
    meta: dict[str, int] = {}
    rows = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for key, val in re.findall(r"(\w+)=(-?\d+)", line):
                meta[key] = int(val)
            continue
        cells = next(csv.reader([line]))
        if not rows and not all(c.strip().lstrip("-").isdigit() for c in cells):
            continue
        rows.append([int(c) for c in cells])
    d = meta.get("d", len(rows[0]) if rows else None)
    if d is None:
        raise click.UsageError(f"{path}: no points and no '# d=<d> n=<n>' header")
    if rows and any(len(r) != d for r in rows):
        raise click.UsageError(f"{path}: every point needs {d} coordinates")
    meta["d"] = d
    return np.array(rows, dtype=np.int64).reshape(-1, d), meta


def load_set(path: str, n: int | None):
    from .lattice import LatticeSet

    P, meta = read_points_csv(path)
    if n is None:
        n = meta.get("n", int(P.max()) if len(P) else None)
    if n is None:
        raise click.UsageError(f"{path}: cannot infer n from an empty file without a header")
    if len(P) and (P.min() < 1 or P.max() > n):
        raise click.UsageError(f"{path}: coordinates must lie in 1..{n}")
    return LatticeSet.from_points(meta["d"], n, P.tolist())


# ----------------------------------------------------------------------------
# dispatch


def _run(ctx: click.Context, params: dict, fn):
    g = ctx.obj
    cfg = RunConfig(ctx.command_path.split(" ", 1)[-1], g["seed"], g["threads"], g["format"], g["out"], g["tol"], params)
    t0 = time.perf_counter()
    try:
        result = fn(cfg)
        status = 0
    except VerificationFailure as exc:
        result = dict(exc.payload, failure=str(exc))
        status = 1
    except ValueError as exc:
        if "invalid-argument" in str(exc):
            raise click.UsageError(str(exc)) from exc
        raise
    emit_report(make_report(cfg, result, time.perf_counter() - t0), cfg.out, cfg.fmt)
    ctx.exit(status)


def _global_options(f):
    f = click.option("--tol", type=float, default=None, help="Numeric tolerance for checks.")(f)
    f = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout).")(f)
    f = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None)(f)
    f = click.option("--threads", type=int, default=None, help="Worker count (default: available CPUs).")(f)
    f = click.option("--seed", type=int, default=None, help=f"Root seed (overrides ${SEED_ENV}; default 0).")(f)
    return f


def command(group, *args, **kwargs):
    """Register a subcommand that also accepts the global flags after its name."""

    def deco(f):
        @functools.wraps(f)
        def wrapper(*a, seed, threads, fmt, out, tol, **kw):
            ctx = click.get_current_context()
            _apply_globals(ctx.find_root(), seed, threads, fmt, out, tol)
            ctx.obj = ctx.find_root().obj
            return f(*a, **kw)

        return group.command(*args, **kwargs)(_global_options(wrapper))

    return deco


def _apply_globals(root: click.Context, seed, threads, fmt, out, tol):
    root.ensure_object(dict)
    obj = root.obj
    if seed is not None or "seed" not in obj:
        obj["seed"] = root_seed(seed)
    if threads is not None or "threads" not in obj:
        obj["threads"] = threads or os.cpu_count() or 1
    if fmt is not None or "format" not in obj:
        obj["format"] = fmt or "json"
    if out is not None or "out" not in obj:
        obj["out"] = out
    if tol is not None or "tol" not in obj:
        obj["tol"] = 1e-9 if tol is None else tol


@click.group()
@_global_options
@click.version_option(__version__, prog_name="sumfree")
@click.pass_context
def cli(ctx, seed, threads, fmt, out, tol):
    """Sum-free subsets of [n]^d: constants, constructions, couplings and certificates."""
    _apply_globals(ctx, seed, threads, fmt, out, tol)


@command(cli)
@click.option("--d", type=click.IntRange(1, 7), required=True)
@click.pass_context
def constants(ctx, d):
    """Optimal threshold u_d and density c_d*."""
    from .slicevol import optimal_threshold

    def run(cfg):
        res = optimal_threshold(d)
        out = {
            "d": d,
            "u_d": {"exact": res.u_text(), "float": res.u_float},
            "c_d_star": {"exact": res.c_star_text(), "float": res.c_star_float},
            "u_interval": [res.u_lo, res.u_hi],
            "derivative_residual": res.derivative_residual,
        }
        if d > 5:
            out["note"] = "exploratory dimension: no density claim"
        return out

    _run(ctx, {"d": d}, run)


@command(cli)
@click.option("--d", type=click.IntRange(1, 5), required=True)
@click.option("--n", type=click.IntRange(1), required=True)
@click.pass_context
def construct(ctx, d, n):
    """Write the extremal slab as CSV points (to --out, or stdout)."""
    from .lattice import build_optimal_set

    S = build_optimal_set(d, n)
    write_points_csv(S.points(), ctx.obj["out"], d, n)


@command(cli)
@click.option("--in", "path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--n", type=click.IntRange(1), default=None, help="Cube side (default: largest coordinate).")
@click.pass_context
def verify(ctx, path, n):
    """Check that a CSV point set is sum-free; exit 1 with a witness triple if not."""
    from .lattice import is_sum_free

    def run(cfg):
        S = load_set(path, n)
        w = is_sum_free(S)
        payload = {"d": S.d, "n": S.n, "size": len(S), "sum_free": w is None}
        if w is not None:
            payload["witness"] = [list(map(int, p)) for p in w]
            raise VerificationFailure("set is not sum-free", payload)
        return payload

    _run(ctx, {"in": path, "n": n}, run)


@command(cli)
@click.option("--d", type=click.IntRange(1, 5), required=True)
@click.option("--n", type=click.IntRange(1), required=True)
@click.option("--budget", type=float, default=1e7, help="Node budget for the branch-and-bound search.")
@click.option("--method", type=click.Choice(["auto", "search", "milp"]), default="auto")
@click.pass_context
def oracle(ctx, d, n, budget, method):
    """Exact maximum sum-free subset size."""
    from .bounds import brute_force_max
    from .lattice import build_optimal_set

    def run(cfg):
        value, S = brute_force_max(d, n, int(budget), method)
        return {"d": d, "n": n, "maximum": value, "extremal_slab": len(build_optimal_set(d, n)),
                "witness": S.points()}

    _run(ctx, {"d": d, "n": n, "budget": budget, "method": method}, run)


@command(cli)
@click.option("--d", type=click.IntRange(1, 5), required=True)
@click.option("--n", type=click.IntRange(1), required=True)
@click.pass_context
def lp(ctx, d, n):
    """Exact optimum of the fractional relaxation."""
    from .bounds import lp_relaxation, verify_optimality

    def run(cfg):
        value, g, res = lp_relaxation(d, n)
        return {"d": d, "n": n, "optimum": value, "per_point": value / n**d, "pivots": res.pivots}

    _run(ctx, {"d": d, "n": n}, run)


@command(cli)
@click.option("--kind", type=click.Choice(["bbd3", "bbd4", "bbd5", "acc", "cce", "p2", "chain4", "chain5"]), required=True)
@click.option("--d", type=click.IntRange(3, 5), default=3, help="Dimension for acc/cce.")
@click.option("--params", default=None, help="Comma-separated slice levels a,b,c for p2 and chain4.")
@click.option("--samples", type=click.IntRange(1), default=10**5)
@click.option("--bins", type=click.IntRange(2), default=50)
@click.pass_context
def couple(ctx, kind, d, params, samples, bins):
    """Draw from a coupling and report sum residual, region violations and binned TV."""
    from . import couplings as cp

    def run(cfg):
        if kind in ("p2", "chain4"):
            if params is None:
                raise ValueError("invalid-argument: --params a,b,c is required")
            a, b, c = (float(Fraction(t)) for t in params.split(","))
            s = cp.p2_slice_sampler(a, b, c) if kind == "p2" else cp.chain_sampler_d4(a, b, c)
        elif kind == "chain5":
            s = cp.chain_sampler_d5()
        else:
            s = cp.sampler_by_kind(kind, d)
        rep = cp.sampler_report(s, samples, named_rng(cfg.seed, f"couple-{kind}", 0), bins)
        rep["targets"] = [t.describe() for t in s.targets]
        ok = rep["max_sum_residual"] <= 1e-12 and sum(rep["violations"]) == 0
        if not ok:
            raise VerificationFailure("sampler left its target regions", rep)
        return rep

    _run(ctx, {"kind": kind, "d": d, "params": params, "samples": samples, "bins": bins}, run)


@command(cli)
@click.option("--step", type=float, default=0.01)
@click.pass_context
def mixcheck(ctx, step):
    """Grid check of the concentration inequality for the pair-sum densities."""
    from .dist1d import mixability_grid_check

    def run(cfg):
        res = mixability_grid_check(step)
        out = {"step": step, "points": res.points, "min_margin": res.min_margin,
               "violations": res.violations[:20], "violation_count": len(res.violations)}
        if res.violations:
            raise VerificationFailure("grid violations found", out)
        return out

    _run(ctx, {"step": step}, run)


@command(cli)
@click.option("--d", type=click.IntRange(3, 5), required=True)
@click.option("--n", type=click.IntRange(4), required=True)
@click.option("--samples", type=click.IntRange(1), default=10**5, help="Samples per component.")
@click.pass_context
def weights(ctx, d, n, samples):
    """Assemble the discretized weight function and write it as JSON."""
    from .discretize import assemble_weight

    g = ctx.obj
    try:
        w = assemble_weight(d, n, samples, g["seed"])
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    data = w.to_json()
    data["triples"] = [[int(c) for c in row[:-1]] + [float(row[-1])] for row in data["triples"]]
    _write(json.dumps(data, sort_keys=True) + "\n", g["out"])


@command(cli, "check-weights")
@click.option("--in", "path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.pass_context
def check_weights(ctx, path):
    """Support, marginal-deviation and C-excess sums of a weight function."""
    from .discretize import WeightFunction, verify_weight_conditions

    def run(cfg):
        w = WeightFunction.from_json(json.loads(Path(path).read_text()))
        return verify_weight_conditions(w).as_dict()

    _run(ctx, {"in": path}, run)


@command(cli)
@click.option("--weights", "wpath", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--set", "spath", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Sum-free set (default: the extremal slab).")
@click.pass_context
def bound(ctx, wpath, spath):
    """Upper-bound certificate for a weight function, checked against a set."""
    from .discretize import WeightFunction, upper_bound_certificate
    from .lattice import build_optimal_set

    def run(cfg):
        w = WeightFunction.from_json(json.loads(Path(wpath).read_text()))
        S = build_optimal_set(w.d, w.n) if spath is None else load_set(spath, w.n)
        B, rep = upper_bound_certificate(S, w)
        return rep.as_dict()

    _run(ctx, {"weights": wpath, "set": spath}, run)


@cli.group()
def planar():
    """The planar case d = 2."""


@command(planar, "weights")
@click.option("--n", type=click.IntRange(20), required=True)
@click.pass_context
def planar_weights(ctx, n):
    """Explicit half-integer weight triples and their exceptional points."""
    from .planar import build_2d_weight

    def run(cfg):
        w = build_2d_weight(n)
        return {
            "n": n,
            "level": w.level,
            "total_weight": w.total_weight,
            "triples": [[Fraction(int(c), 2) for c in row] for row in w.doubled],
            "exceptional_points": [list(p) for p in w.exceptional_points()],
        }

    _run(ctx, {"n": n}, run)


@command(planar, "casework")
@click.option("--k-max", type=click.IntRange(3), default=50)
@click.pass_context
def planar_casework(ctx, k_max):
    """Minimize each corner case and check the 2/5 threshold."""
    from .planar import verify_corner_casework

    def run(cfg):
        rep = verify_corner_casework(k_max=k_max, strict=False)
        if not rep["ok"]:
            raise VerificationFailure("a corner case is below 2/5", rep)
        return rep

    _run(ctx, {"k_max": k_max}, run)


@command(planar, "stability")
@click.option("--set", "spath", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--n", type=click.IntRange(20), default=None, help="Side (required without --set).")
@click.option("--alpha", default="7/30")
@click.option("--beta", default="1/10")
@click.pass_context
def planar_stability(ctx, spath, n, alpha, beta):
    """Upper bound for a sum-free set inside the diagonal band."""
    from .lattice import build_optimal_set
    from .planar import stability_bound

    def run(cfg):
        if spath is None and n is None:
            raise ValueError("invalid-argument: give --set or --n")
        S = build_optimal_set(2, n) if spath is None else load_set(spath, n)
        rep = stability_bound(S, Fraction(alpha), Fraction(beta))
        return {
            "n": rep.n,
            "alpha": rep.alpha,
            "beta": rep.beta,
            "set_size": rep.set_size,
            "bound": rep.bound,
            "weighted_part": rep.weighted_part,
            "uncovered_part": rep.uncovered_part,
            "total_weight": rep.total_weight,
            "bound_minus_three_fifths_n2": Fraction(rep.bound) - Fraction(3 * rep.n**2, 5),
            "extras": rep.extras,
        }

    _run(ctx, {"set": spath, "n": n, "alpha": alpha, "beta": beta}, run)


@command(cli)
@click.option("--suite", type=click.Choice(["smoke"]), default="smoke")
@click.pass_context
def report(ctx, suite):
    """Run a quick acceptance smoke suite; exit 1 if any check fails."""

    def run(cfg):
        results = [{"check": name, "passed": bool(ok), "detail": detail} for name, ok, detail in smoke_suite(cfg)]
        payload = {"suite": suite, "checks": results, "passed": all(r["passed"] for r in results)}
        if not payload["passed"]:
            raise VerificationFailure("smoke suite failed", payload)
        return payload

    _run(ctx, {"suite": suite}, run)


def smoke_suite(cfg: RunConfig):
    from .bounds import sandwich
    from .couplings import p2_slice_sampler, sampler_report
    from .dist1d import mixability_grid_check
    from .lattice import build_optimal_set, is_sum_free
    from .planar import build_2d_weight, corner_upper_value, verify_corner_casework
    from .slicevol import optimal_threshold

    r2 = optimal_threshold(2)
    yield "constants d=2", r2.u_exact == Fraction(4, 5) and r2.c_star_exact == Fraction(3, 5), r2.u_text()
    r3 = optimal_threshold(3)
    yield "constants d=3", abs(r3.u_float - (15 - math.sqrt(15)) / 10) < 1e-10, r3.u_text()
    S = build_optimal_set(3, 10)
    yield "slab d=3 n=10 sum-free", is_sum_free(S) is None, len(S)
    sw = sandwich(1, 8)
    yield "sandwich d=1 n=8", sw["ok"], {k: str(v) for k, v in sw.items()}
    rep = sampler_report(p2_slice_sampler(0.9, 0.9, 1.8), 20000, named_rng(cfg.seed, "smoke", 0))
    yield "p2 coupling", rep["max_sum_residual"] <= 1e-12 and sum(rep["violations"]) == 0, rep["max_tv"]
    g = mixability_grid_check(0.02)
    yield "mixability grid step 0.02", not g.violations, g.min_margin
    yield "corner value at 7/10", abs(corner_upper_value(0.7) - 0.5997) < 1e-3, corner_upper_value(0.7)
    cw = verify_corner_casework(step=5e-3, k_max=10, strict=False)
    yield "corner casework >= 2/5", cw["ok"], [c["minimum"] for c in cw["cases"]]
    w = build_2d_weight(50)
    yield "planar weights n=50", w.total_weight == 42, w.total_weight


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="sumfree", standalone_mode=True)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else (0 if exc.code is None else 2)
        sys.exit(code)


if __name__ == "__main__":
    main()
