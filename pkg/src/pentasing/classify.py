"""Detect and synthesize designs whose singularity polynomial drops in degree.

Only planar designs can be position-linear or orientation-linear; no
non-architecture-singular design has a singularity polynomial of total
degree two, so that verdict never appears.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .brackets import ArchColumns, ArchStatus, architecture_verdict, bracket
from .errors import ArchitectureSingularResult, DesignError, SynthesisRejected
from .model import COINCIDENCE_TOL, PLANAR_TOL, CanonicalDesign, Design, canonicalize
from .sigma import Target, sigma_polynomial, undesired_polynomial

VANISH_REL = 1e-9


class Verdict(enum.Enum):
    ARCHITECTURE_SINGULAR = "architecture-singular"
    POSITION_LINEAR = "position-linear"
    ORIENTATION_LINEAR = "orientation-linear"
    GENERIC = "generic"


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    alpha: Optional[float] = None
    beta: Optional[float] = None
    item: Optional[int] = None
    witness: str = ""
    residuals: Dict[str, float] = field(default_factory=dict)

    def describe(self) -> str:
        if self.verdict is Verdict.POSITION_LINEAR:
            return f"position-linear, alpha={_fmt(self.alpha)}, beta={_fmt(self.beta)}"
        if self.verdict is Verdict.ORIENTATION_LINEAR:
            return (
                f"orientation-linear item {self.item}, "
                f"alpha={_fmt(self.alpha)}, beta={_fmt(self.beta)}"
            )
        if self.verdict is Verdict.ARCHITECTURE_SINGULAR:
            return f"architecture-singular ({self.witness})"
        return "generic"


def _fmt(x: float) -> str:
    r = round(x)
    if abs(x - r) < 1e-9 * max(1.0, abs(x)):
        return str(int(r))
    return f"{x:.8f}"


def _lstsq_pair(target, a, b) -> Tuple[float, float, float]:
    """Solve ``target = alpha*a + beta*b`` in least squares; return relative residual."""
    M = np.column_stack([a, b])
    sol, *_ = np.linalg.lstsq(M, target, rcond=None)
    res = float(np.linalg.norm(M @ sol - target) / max(np.linalg.norm(target), 1e-300))
    return float(sol[0]), float(sol[1]), res


def _collinear(points: np.ndarray, scale: float) -> float:
    """Normalized deviation of planar points from their best-fit line (0 for collinear)."""
    if len(points) <= 2:
        return 0.0
    c = points - points.mean(axis=0)
    s = np.linalg.svd(c, compute_uv=False)
    return float(s[-1] / max(scale, 1e-300))


def _orientation_item(design: Design) -> Tuple[int, str, float]:
    r = design.platform
    tol = COINCIDENCE_TOL * max(design.platform_diameter(), 1e-300)
    zero_legs = [j for j in range(1, 5) if abs(r[j] - r[0]) <= tol]
    other = [j for j in range(1, 5) if j not in zero_legs]
    item = len(zero_legs) + 1
    dev = _collinear(design.base[other, :2], design.base_diameter())
    legs = ",".join(f"M{j + 1}" for j in other)
    if item == 1:
        witness = f"{legs} collinear"
    elif item == 2:
        witness = f"m1=m{zero_legs[0] + 1}; {legs} collinear"
    else:
        witness = "m1=" + "=".join(f"m{j + 1}" for j in zero_legs)
    return item, witness, dev


def classify(d: CanonicalDesign, tol: float = VANISH_REL) -> Classification:
    """Which simplified-singularity family ``d`` belongs to.

    Order of checks: architecture singularity, planarity, the two
    position-linear brackets ``[r,X,Y,rX]``, ``[r,X,Y,rY]``, then the two
    orientation-linear brackets ``[r,X,rX,rY]``, ``[r,Y,rX,rY]``. A bracket
    vanishes when it is below ``tol`` times the largest coefficient of the
    singularity polynomial.
    """
    if not isinstance(d, CanonicalDesign):
        d = canonicalize(d)
    arch = architecture_verdict(d)
    if arch.status is not ArchStatus.NOT_ARCH_SINGULAR:
        return Classification(Verdict.ARCHITECTURE_SINGULAR, witness=arch.witness or arch.status.value)

    sig = sigma_polynomial(d)
    scale = sig.max_abs_coefficient()
    cols = ArchColumns.from_design(d.design)
    residuals: Dict[str, float] = {}

    def rel(x):
        return abs(x) / scale if scale else 0.0

    for target in Target:
        residuals[f"undesired:{target.value}"] = rel(
            undesired_polynomial(d, target, sig).max_abs_coefficient()
        )
    if not d.is_planar:
        residuals["planarity"] = float(
            np.abs(d.base[3:, 2]).max() / d.base_diameter()
        )
        return Classification(Verdict.GENERIC, witness="non-planar base", residuals=residuals)

    pl = max(rel(bracket("r", "X", "Y", "rX", cols)), rel(bracket("r", "X", "Y", "rY", cols)))
    ol = max(rel(bracket("r", "X", "rX", "rY", cols)), rel(bracket("r", "Y", "rX", "rY", cols)))
    residuals["brackets:position-linear"] = pl
    residuals["brackets:orientation-linear"] = ol

    if pl < tol:
        alpha, beta, res = _lstsq_pair(d.r, d.X, d.Y)
        residuals["kappa"] = res
        return Classification(
            Verdict.POSITION_LINEAR, alpha, beta,
            witness="r = alpha*X + beta*Y", residuals=residuals,
        )
    if ol < tol:
        r = d.r
        alpha, beta, res = _lstsq_pair(r, r * d.X, r * d.Y)
        residuals["span"] = res
        item, witness, dev = _orientation_item(d.design)
        residuals["collinearity"] = dev
        return Classification(
            Verdict.ORIENTATION_LINEAR, alpha, beta, item=item,
            witness=witness, residuals=residuals,
        )
    return Classification(Verdict.GENERIC, residuals=residuals)


def kappa_residual(d: CanonicalDesign) -> float:
    """Relative least-squares residual of ``r = alpha*X + beta*Y``."""
    return _lstsq_pair(d.r, d.X, d.Y)[2]


# synthesis -------------------------------------------------------------------

def _checked(design: Design, expected: Verdict, item: Optional[int] = None) -> Design:
    try:
        canon = canonicalize(design)
    except DesignError as exc:
        raise ArchitectureSingularResult(f"architecture singular: {exc}", witness=str(exc)) from None
    cls = classify(canon)
    if cls.verdict is Verdict.ARCHITECTURE_SINGULAR:
        raise ArchitectureSingularResult(
            f"synthesized design is architecture singular ({cls.witness})", witness=cls.witness
        )
    if cls.verdict is not expected or (item is not None and cls.item != item):
        raise SynthesisRejected(f"synthesized design classifies as {cls.describe()}")
    return design


def synthesize_position_linear(base, alpha: float, beta: float) -> Design:
    """Design with platform offsets ``r_i = alpha*x_i + beta*y_i`` over a base in the xy-plane."""
    b = np.asarray(base, dtype=float)
    if b.shape != (5, 3):
        raise ValueError("base must be five 3-vectors")
    diam = float(np.max(np.linalg.norm(b[:, None] - b[None], axis=-1)))
    if np.any(np.abs(b[:, 2]) > PLANAR_TOL * max(diam, 1.0)):
        raise SynthesisRejected("base points must lie in the plane z = 0")
    r = alpha * b[:, 0] + beta * b[:, 1]
    return _checked(Design(b, r), Verdict.POSITION_LINEAR)


def points_on_line(alpha: float, beta: float, coords: Sequence[float]) -> np.ndarray:
    """Points of the line ``alpha*x + beta*y = 1`` (z = 0) at signed arc-length ``coords``."""
    n2 = alpha * alpha + beta * beta
    if n2 == 0.0:
        raise ValueError("(alpha, beta) must not both vanish")
    foot = np.array([alpha, beta]) / n2
    direction = np.array([-beta, alpha]) / np.sqrt(n2)
    pts = foot[None, :] + np.asarray(coords, dtype=float)[:, None] * direction[None, :]
    return np.column_stack([pts, np.zeros(len(pts))])


def synthesize_orientation_linear(item: int, base, platform) -> Design:
    """Validate and return an orientation-linear design of the given item.

    ``base`` is five planar points and ``platform`` five offsets. Item ``k``
    requires exactly ``k-1`` legs among 2..5 sharing the platform point of
    leg 1; for items 1 and 2 the base points of the remaining legs must be
    collinear.
    """
    if item not in (1, 2, 3):
        raise ValueError("item must be 1, 2 or 3")
    design = Design(base, platform)
    if np.any(np.abs(design.base[:, 2]) > PLANAR_TOL * max(design.base_diameter(), 1.0)):
        raise SynthesisRejected("base points must lie in the plane z = 0")
    got, witness, dev = _orientation_item(design)
    if got != item:
        raise SynthesisRejected(
            f"item {item} needs {item - 1} platform points equal to m1, design has {got - 1}"
        )
    if dev > PLANAR_TOL:
        raise SynthesisRejected(f"base points are not collinear ({witness}, deviation {dev:.3g})")
    return _checked(design, Verdict.ORIENTATION_LINEAR, item)
