"""Command-line front end.

Exit codes: 0 success, 1 other analysis error, 2 bad input, 3 singular
query, 4 unsupported design family, 5 solver budget exhausted.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .classify import classify
from .errors import (
    BudgetExhausted,
    DesignError,
    PentapodError,
    SingularQuery,
    UnsupportedFamily,
)
from .model import Pose, canonicalize, load_design
from .optimize import Mode, SolverSettings, build_lagrange, solve_critical_points
from .pedal import fixed_orientation_pedals, fixed_position_pedals, orientation_planes, position_planes
from .sigma import restrict_position, sigma_polynomial

EXIT_OK, EXIT_ERROR, EXIT_PARSE, EXIT_SINGULAR, EXIT_UNSUPPORTED, EXIT_BUDGET = 0, 1, 2, 3, 4, 5
DISTANCE_COLUMNS = (
    "mode", "u", "v", "w", "px", "py", "pz", "lambda1", "lambda2", "mu", "distance", "residual",
)
POLY_HEADER = "du,dv,dw,dpx,dpy,dpz,coefficient"
NORMALIZE_TOL = 1e-6


@dataclass
class RunReport:
    """Machine-readable record of one invocation (written with ``--report``)."""

    command: List[str]
    inputs: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, Any] = field(default_factory=dict)
    residuals: Dict[str, float] = field(default_factory=dict)
    timing: Dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


class _Context:
    def __init__(self, args: argparse.Namespace, argv: Sequence[str]):
        self.args = args
        self.report = RunReport(command=list(argv))

    def warn(self, message: str) -> None:
        if not self.args.quiet:
            print(f"warning: {message}", file=sys.stderr)


def _f8(x: Optional[float]) -> str:
    if x is None:
        return ""
    return f"{x:.8f}"


def _resolve_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("PENTASING_SEED")
    if env is None or not env.strip():
        return 0
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"PENTASING_SEED must be an integer, got {env!r}") from None


def _load(ctx: _Context):
    design, meta = load_design(ctx.args.design)
    ctx.report.inputs["design"] = str(ctx.args.design)
    ctx.report.inputs.update({f"design.{k}": v for k, v in meta.items()})
    return canonicalize(design)


# classify -------------------------------------------------------------------

def cmd_classify(ctx: _Context) -> int:
    cd = _load(ctx)
    cls = classify(cd, tol=ctx.args.tol)
    print(cls.describe())
    if not ctx.args.quiet:
        if cls.witness:
            print(f"witness: {cls.witness}")
        for name in sorted(cls.residuals):
            print(f"residual {name}: {cls.residuals[name]:.3e}")
    ctx.report.outputs = {
        "verdict": cls.verdict.value, "alpha": cls.alpha, "beta": cls.beta,
        "item": cls.item, "witness": cls.witness, "canonical_identity": cd.provenance.is_identity(),
    }
    ctx.report.residuals = dict(cls.residuals)
    return EXIT_OK


# sigma ----------------------------------------------------------------------

def cmd_sigma(ctx: _Context) -> int:
    cd = _load(ctx)
    sig = sigma_polynomial(cd)
    if sig.is_zero():
        ctx.warn("design is architecture singular; the singularity polynomial is identically zero")
    if ctx.args.format == "csv":
        sys.stdout.write(POLY_HEADER + "\n" + sig.to_csv())
    else:
        print(sig.to_text())
    ctx.report.outputs = {"terms": len(sig), "total_degree": sig.total_degree()}
    return EXIT_OK


# distance -------------------------------------------------------------------

def _query_pose(ctx: _Context) -> Pose:
    vals = np.array(ctx.args.pose, dtype=float)
    o = vals[:3]
    n = float(np.linalg.norm(o))
    if abs(n - 1.0) > NORMALIZE_TOL:
        raise ValueError(f"query orientation has norm {n:.8g}; expected a unit vector")
    if abs(n - 1.0) > 1e-12:
        ctx.warn(f"normalizing query orientation (norm {n:.12g})")
        o = o / n
    return Pose(o, vals[3:])


def _distance_rows(ctx: _Context, cd, g: Pose) -> List[List[str]]:
    mode = ctx.args.mode
    rows = []
    sig = sigma_polynomial(cd)
    if mode in ("fixed-orientation", "fixed-position"):
        fn = fixed_orientation_pedals if mode == "fixed-orientation" else fixed_position_pedals
        sols = fn(cd, g)
        for s in sols:
            x = s.pose.as_vector()
            res = abs(sig.evaluate(x)) / max(sig.term_magnitude(x), 1e-300)
            rows.append([mode, *map(_f8, x), "", "", "", _f8(s.distance), f"{res:.3e}"])
        return rows
    settings = SolverSettings(seed=ctx.args.seed, starts=ctx.args.starts)
    sys_ = build_lagrange(cd, g, Mode(mode))
    pts = solve_critical_points(sys_, settings)
    for p in pts:
        lam1 = p.lambda1 if mode == "euclidean" else None
        mu = p.scale if mode == "equiform" else None
        rows.append([
            mode, *map(_f8, p.pose.as_vector()), _f8(lam1), _f8(p.lambda2), _f8(mu),
            _f8(p.distance), f"{p.residual:.3e}",
        ])
    return rows


def cmd_distance(ctx: _Context) -> int:
    cd = _load(ctx)
    if not cd.provenance.is_identity():
        ctx.warn("design was moved to its canonical frame; the pose is read in that frame")
    g = _query_pose(ctx)
    ctx.report.inputs.update({"pose": list(g.as_vector()), "mode": ctx.args.mode})
    rows = _distance_rows(ctx, cd, g)
    if not ctx.args.all:
        rows = rows[:1]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DISTANCE_COLUMNS)
    writer.writerows(rows)
    sys.stdout.write(buf.getvalue())
    ctx.report.outputs = {"rows": [dict(zip(DISTANCE_COLUMNS, r)) for r in rows]}
    return EXIT_OK


# sample-surface -------------------------------------------------------------

def _plane_samples(A: np.ndarray, n: int, extent: float) -> np.ndarray:
    """Grid points of ``A[:3].p + A[3] = 0`` inside the cube ``[-extent, extent]^3``."""
    k = int(np.argmax(np.abs(A[:3])))
    others = [j for j in range(3) if j != k]
    t = np.linspace(-extent, extent, n)
    a, b = np.meshgrid(t, t, indexing="ij")
    pts = np.zeros((a.size, 3))
    pts[:, others[0]] = a.ravel()
    pts[:, others[1]] = b.ravel()
    pts[:, k] = -(A[3] + A[others[0]] * pts[:, others[0]] + A[others[1]] * pts[:, others[1]]) / A[k]
    return pts[np.all(np.abs(pts) <= extent * (1 + 1e-12), axis=1)]


def cmd_sample_surface(ctx: _Context) -> int:
    cd = _load(ctx)
    sig = sigma_polynomial(cd)
    at = np.array(ctx.args.at, dtype=float)
    n, band = ctx.args.grid, ctx.args.band
    if n < 2:
        raise ValueError("--grid must be at least 2")
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    if ctx.args.fix == "orientation":
        planes = position_planes(sig, at)
        w.writerow(["branch", "px", "py", "pz"])
        count = 0
        for branch, A in planes:
            if A[:3] @ A[:3] == 0.0:
                continue
            for p in _plane_samples(A, n, ctx.args.extent):
                w.writerow([branch, *map(_f8, p)])
                count += 1
        ctx.report.outputs = {"points": count, "planes": len(planes)}
    else:
        orientation_planes(sig, at)  # raises for designs outside both families
        q = restrict_position(sig, at)
        cmax = q.max_abs_coefficient() or 1.0
        theta = math.pi * (np.arange(n) + 0.5) / n
        phi = 2.0 * math.pi * np.arange(n) / n
        T, P = np.meshgrid(theta, phi, indexing="ij")
        pts = np.column_stack([
            (np.sin(T) * np.cos(P)).ravel(), (np.sin(T) * np.sin(P)).ravel(), np.cos(T).ravel(),
        ])
        full = np.zeros((len(pts), 6))
        full[:, :3] = pts
        vals = q.evaluate_many(full) / cmax
        flags = np.abs(vals) < band
        w.writerow(["u", "v", "w", "value", "singular"])
        for p, v, f in zip(pts, vals, flags):
            w.writerow([*map(_f8, p), f"{v:.3e}", int(f)])
        ctx.report.outputs = {"samples": len(pts), "flagged": int(flags.sum())}
    text = out.getvalue()
    if ctx.args.out:
        with open(ctx.args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# argument parsing -----------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(None),
                        help="solver seed (default: $PENTASING_SEED or 0)")
    parser.add_argument("--tol", type=float, default=default(1e-9),
                        help="relative vanishing tolerance")
    parser.add_argument("--quiet", action="store_true", default=default(False),
                        help="suppress warnings and detail lines")
    parser.add_argument("--report", metavar="PATH", default=default(None),
                        help="write a JSON run report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pentasing",
        description="Singularity analysis and singularity-free zones of linear pentapods.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    # the same flags after the verb; SUPPRESS keeps the top-level values unless given
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="which simplified family a design belongs to")
    p.add_argument("design")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sigma", parents=[common], help="export the singularity polynomial")
    p.add_argument("design")
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.set_defaults(func=cmd_sigma)

    p = sub.add_parser("distance", parents=[common], help="nearest singular pose to a query")
    p.add_argument("design")
    p.add_argument("--pose", nargs=6, type=float, required=True,
                   metavar=("U", "V", "W", "PX", "PY", "PZ"))
    p.add_argument("--mode", default="euclidean",
                   choices=("fixed-orientation", "fixed-position", "euclidean", "equiform"))
    p.add_argument("--all", action="store_true", help="print every solution, not only the nearest")
    p.add_argument("--starts", type=int, default=SolverSettings.starts, help="multi-start budget")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("sample-surface", parents=[common], help="sample the variety restricted to a fixed pose block")
    p.add_argument("design")
    p.add_argument("--fix", choices=("orientation", "position"), required=True)
    p.add_argument("--at", nargs=3, type=float, required=True, metavar=("A", "B", "C"))
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--band", type=float, default=1e-3,
                   help="flag sphere samples with |F|/max|coef| below this")
    p.add_argument("--extent", type=float, default=5.0, help="half-width of the position box")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.set_defaults(func=cmd_sample_surface)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    ctx = _Context(args, argv)
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        args.seed = _resolve_seed(args.seed)
        ctx.report.inputs["seed"] = args.seed
        code = args.func(ctx)
    except SingularQuery as exc:
        print(f"error: singular query: {exc}", file=sys.stderr)
        code = EXIT_SINGULAR
    except UnsupportedFamily as exc:
        print(f"error: unsupported design family: {exc}", file=sys.stderr)
        code = EXIT_UNSUPPORTED
    except BudgetExhausted as exc:
        print(f"error: solver budget exhausted: {exc}", file=sys.stderr)
        code = EXIT_BUDGET
    except (DesignError, ValueError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_PARSE
    except PentapodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_ERROR
    ctx.report.timing["seconds"] = time.perf_counter() - t0
    ctx.report.outputs.setdefault("exit_code", code)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(ctx.report.to_json())
    return code


if __name__ == "__main__":
    sys.exit(main())
