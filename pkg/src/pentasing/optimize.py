"""Nearest singular pose under Euclidean or equiform motions of the platform.

The Lagrange function couples the squared line-element distance to the
query with the singularity polynomial ``F`` (and, for Euclidean motions,
the unit-orientation constraint)::

    L = d(x, g)^2 + lam1 (u^2 + v^2 + w^2 - 1) + lam2 F(x)

For a design whose ``F`` is linear in position the three position
equations are solved in closed form and Newton runs on
``(u, v, w, lam1, lam2)``; for a design linear in orientation the
orientation block is eliminated instead. Equiform motions drop ``lam1``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from . import _explicit, kernels
from .errors import BudgetExhausted, SingularQuery, UnsupportedFamily
from .model import CanonicalDesign, MetricCoefficients, Pose, canonicalize
from .poly import MultiPoly
from .sigma import sigma_polynomial

SINGULAR_REL = 1e-10
RESIDUAL_REL = 1e-9
SIGMA_REL = 1e-8
GAMMA_TOL = 1e-8
DEDUP_ATOL = 1e-6
MIN_SCALE = 1e-6
LINEAR_REL = 1e-9


class Mode(enum.Enum):
    EUCLIDEAN = "euclidean"
    EQUIFORM = "equiform"


@dataclass(frozen=True)
class SolverSettings:
    """Multi-start Newton budget.

    ``starts`` is rounded up to a power of two (Sobol balance). ``expected``
    makes :func:`solve_critical_points` raise :class:`BudgetExhausted` when
    fewer distinct real critical points are found.
    """

    seed: int = 0
    starts: int = 4096
    max_iter: int = 100
    tol: float = 1e-13
    dedup_atol: float = DEDUP_ATOL
    multiplier_range: Tuple[float, float] = (1e-4, 1e2)
    scale_range: Tuple[float, float] = (0.05, 4.0)
    expected: Optional[int] = None
    backend: Optional[str] = None


@dataclass(frozen=True, eq=False)
class LagrangeSystem:
    design: CanonicalDesign
    query: Pose
    mode: Mode
    sigma: MultiPoly
    metric: MetricCoefficients
    eliminated: str  # "position" or "orientation"

    @property
    def euclidean(self) -> bool:
        return self.mode is Mode.EUCLIDEAN

    @property
    def variables(self) -> Tuple[str, ...]:
        kept = ("u", "v", "w") if self.eliminated == "position" else ("px", "py", "pz")
        return kept + (("lambda1", "lambda2") if self.euclidean else ("lambda2",))

    @property
    def n_equations(self) -> int:
        return 8 if self.euclidean else 7

    @property
    def n_reduced(self) -> int:
        return len(self.variables)

    def kernel_args(self):
        exps, coefs = self.sigma.arrays()
        return (
            exps, coefs, self.metric.mean_square, self.metric.mean_offset,
            self.query.as_vector(), self.euclidean, self.eliminated == "position",
        )

    def recover(self, y) -> Tuple[np.ndarray, float]:
        """Full pose vector from reduced unknowns, and the elimination pivot."""
        _, x, _, c = kernels.reduced_residual(np.asarray(y, dtype=float), *self.kernel_args())
        return x, c

    def gradient(self, x, lam1: float, lam2: float) -> np.ndarray:
        """Gradient of the Lagrange function in all unknowns (independent of the kernels)."""
        W = self.metric.matrix()
        dx = np.asarray(x) - self.query.as_vector()
        grad_f = np.array([self.sigma.derivative(k).evaluate(x) for k in range(6)])
        gx = 2.0 * W @ dx + lam2 * grad_f
        out = list(gx)
        if self.euclidean:
            out[:3] = gx[:3] + 2.0 * lam1 * np.asarray(x[:3])
            out.append(float(np.dot(x[:3], x[:3]) - 1.0))
        out.append(self.sigma.evaluate(x))
        return np.array(out)


@dataclass(frozen=True, eq=False)
class CriticalPoint:
    pose: Pose
    multipliers: Tuple[float, ...]
    distance: float
    scale: float
    residual: float
    reduced: Tuple[float, ...] = ()

    @property
    def lambda1(self) -> Optional[float]:
        return self.multipliers[0] if len(self.multipliers) == 2 else None

    @property
    def lambda2(self) -> float:
        return self.multipliers[-1]


def _is_singular(sig: MultiPoly, g: Pose) -> bool:
    x = g.as_vector()
    return abs(sig.evaluate(x)) <= SINGULAR_REL * max(sig.term_magnitude(x), 1e-300)


def constraint_polynomial(sig: MultiPoly) -> MultiPoly:
    """``F = +-det(S)`` with the sign fixed so that the leading term of its lowest-degree part is positive.

    The determinant's sign depends on row and column order; pinning it makes
    ``lam2`` comparable across designs.
    """
    if sig.is_zero():
        return sig
    low = min(sum(e) for e in sig.terms)
    lead = max(e for e in sig.terms if sum(e) == low)
    return -sig if sig.terms[lead] < 0 else sig


def build_lagrange(d: CanonicalDesign, g: Pose, mode=Mode.EUCLIDEAN) -> LagrangeSystem:
    """Assemble the Lagrange system for a design with a position- or orientation-linear ``F``.

    Raises
    ------
    UnsupportedFamily
        ``F`` is quadratic in both position and orientation.
    SingularQuery
        ``g`` lies on the singularity variety.
    """
    if not isinstance(d, CanonicalDesign):
        d = canonicalize(d)
    mode = Mode(mode)
    sig = constraint_polynomial(sigma_polynomial(d))
    if sig.is_zero():
        raise UnsupportedFamily("singularity polynomial vanishes identically (architecture singular)")
    # rounding can leave quadratic terms at the level of the bracket noise
    if sig.position_degree(LINEAR_REL) <= 1:
        eliminated = "position"
        sig = sig.select(lambda e: e[3] + e[4] + e[5] <= 1)
    elif sig.orientation_degree(LINEAR_REL) <= 1:
        eliminated = "orientation"
        sig = sig.select(lambda e: e[0] + e[1] + e[2] <= 1)
    else:
        raise UnsupportedFamily(
            "singularity polynomial is quadratic in both position and orientation"
        )
    if mode is Mode.EUCLIDEAN and not g.is_euclidean(1e-9):
        raise ValueError("Euclidean queries need a unit orientation")
    if _is_singular(sig, g):
        raise SingularQuery("query pose lies on the singularity variety")
    return LagrangeSystem(d, g, mode, sig, MetricCoefficients.from_design(d), eliminated)


# start points ----------------------------------------------------------------

def _sobol(dim: int, n: int, seed: int) -> np.ndarray:
    m = max(0, math.ceil(math.log2(max(n, 1))))
    return qmc.Sobol(d=dim, scramble=True, seed=seed).random_base2(m)


def _sphere(s0, s1) -> np.ndarray:
    z = 2.0 * s0 - 1.0
    phi = 2.0 * math.pi * s1
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _log_range(s, lo, hi):
    return np.exp(np.log(lo) + (np.log(hi) - np.log(lo)) * s)


def _signed_log(s, lo, hi):
    sign = np.where(s < 0.5, -1.0, 1.0)
    return sign * _log_range((2.0 * s) % 1.0, lo, hi)


@dataclass(frozen=True, eq=False)
class StartSet:
    """Starts for the explicit-multiplier stage and for the full reduced system."""

    explicit: np.ndarray
    branch: np.ndarray
    full: np.ndarray


def start_points(sys: LagrangeSystem, settings: SolverSettings) -> StartSet:
    """Deterministic start points.

    Half of the budget seeds the explicit-multiplier system from Sobol
    samples of the kept pose block. The full reduced system gets a quarter
    from poses projected onto the variety and a quarter with log-uniform
    random multipliers of both signs.
    """
    from ._kernel_py import _PolyDerivatives

    deriv = _PolyDerivatives(*sys.sigma.arrays())
    n_exp = max(1, settings.starts // 2)
    n_proj = max(1, settings.starts // 4)
    n_rand = max(0, settings.starts - n_exp - n_proj)
    z, branch = _explicit_starts(sys, settings, n_exp)
    proj = _projected_starts(sys, settings, n_proj, deriv)
    cons = _consistent_starts(sys, settings, max(1, n_rand), deriv)
    full = np.vstack([proj, _random_multipliers(cons, sys, settings, n_rand)])
    return StartSet(z, branch, full[np.all(np.isfinite(full), axis=1)])


def _explicit_starts(sys: LagrangeSystem, settings: SolverSettings, n: int):
    g = sys.query.as_vector()
    s = _sobol(3, n, settings.seed + 3)[:n]
    if sys.eliminated == "position":
        orient = _sphere(s[:, 0], s[:, 1])
        if not sys.euclidean:
            return orient * _log_range(s[:, 2], *settings.scale_range)[:, None], np.ones(len(s))
        # lam1 from the radial component of the orientation equations
        ex = _explicit.ExplicitSystem(*sys.kernel_args())
        z = np.column_stack([orient, np.zeros(len(s))])
        r = ex.residual(z, np.ones(len(s)))
        z[:, 3] = -(orient * r[:, :3]).sum(1) / 2.0
        return z, np.ones(len(s))
    radius = 4.0 * (1.0 + np.linalg.norm(g[3:]) + np.abs(sys.design.platform).max())
    pos = g[3:] + radius * np.cbrt(s[:, 2])[:, None] * _sphere(s[:, 0], s[:, 1])
    if not sys.euclidean:
        return pos, np.ones(len(s))
    half = (len(pos) + 1) // 2
    branch = np.where(np.arange(len(pos)) < half, 1.0, -1.0)
    return np.vstack([pos[:half], pos[:len(pos) - half]]), branch


def _consistent_starts(sys: LagrangeSystem, settings: SolverSettings, n: int, deriv) -> np.ndarray:
    g = sys.query.as_vector()
    gi, gp = g[:3], g[3:]
    rb, sb = sys.metric.mean_offset, sys.metric.mean_square
    s = _sobol(3, n, settings.seed)[:n]
    X = np.zeros((len(s), 6))

    if sys.eliminated == "position":
        orient = _sphere(s[:, 0], s[:, 1])
        if not sys.euclidean:
            orient *= _log_range(s[:, 2], *settings.scale_range)[:, None]
        X[:, :3] = orient
        X[:, 3:] = gp - rb * (orient - gi)
        F0, dF, _ = deriv(X)
        a = dF[:, 3:]
        a2 = (a * a).sum(1)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam2 = np.where(a2 > 0, 2.0 * F0 / a2, 0.0)
        X[:, 3:] -= 0.5 * lam2[:, None] * a
        kept = orient
    else:
        radius = 4.0 * (1.0 + np.linalg.norm(gp) + np.abs(sys.design.platform).max())
        pos = gp + radius * np.cbrt(s[:, 2])[:, None] * _sphere(s[:, 0], s[:, 1])
        X[:, 3:] = pos
        _, dF, _ = deriv(X)
        beta = dF[:, :3]
        b2 = (beta * beta).sum(1)
        q0 = sb * gi - rb * (pos - gp)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam2 = np.where(b2 > 0, 2.0 * (beta * q0).sum(1) / b2, 0.0)
        q = q0 - 0.5 * lam2[:, None] * beta
        kept = pos
        if sys.euclidean:
            # |i| = 1 fixes s + lam1 up to sign
            qn = np.linalg.norm(q, axis=1)
            lam1 = np.concatenate([qn - sb, -qn - sb])
            return np.column_stack([np.vstack([kept, kept]), lam1, np.concatenate([lam2, lam2])])
        X[:, :3] = q / sb

    if not sys.euclidean:
        return np.column_stack([kept, lam2])
    _, dF, _ = deriv(X)
    rest = 2.0 * (sb * (X[:, :3] - gi) + rb * (X[:, 3:] - gp)) + lam2[:, None] * dF[:, :3]
    n2 = (X[:, :3] ** 2).sum(1)
    lam1 = -(X[:, :3] * rest).sum(1) / (2.0 * n2)
    return np.column_stack([kept, lam1, lam2])


def _projected_starts(sys: LagrangeSystem, settings: SolverSettings, n: int, deriv) -> np.ndarray:
    """Starts lying on the singularity variety, with least-squares multipliers.

    Sobol poses are pulled onto ``F = 0`` by Gauss-Newton steps along the
    gradient (renormalizing the orientation for Euclidean motions), so every
    component of the variety, including linear factors, is seeded.
    """
    g = sys.query.as_vector()
    rb, sb = sys.metric.mean_offset, sys.metric.mean_square
    s = _sobol(5, n, settings.seed + 2)[:n]
    X = np.zeros((len(s), 6))
    X[:, :3] = _sphere(s[:, 0], s[:, 1])
    if not sys.euclidean:
        X[:, :3] *= _log_range(s[:, 2], *settings.scale_range)[:, None]
    radius = 2.0 * (1.0 + np.linalg.norm(g[3:]) + np.abs(sys.design.platform).max())
    X[:, 3:] = g[3:] + radius * np.cbrt(s[:, 3])[:, None] * _sphere(s[:, 4], s[:, 2])
    for _ in range(30):
        F, dF, _ = deriv(X)
        n2 = (dF * dF).sum(1)
        with np.errstate(divide="ignore", invalid="ignore"):
            X = X - np.where(n2 > 0, F / n2, 0.0)[:, None] * dF
        if sys.euclidean:
            X[:, :3] /= np.linalg.norm(X[:, :3], axis=1)[:, None]
    _, dF, _ = deriv(X)
    grad = 2.0 * (X - g) @ sys.metric.matrix().T
    if sys.euclidean:
        A = np.zeros((len(X), 6, 2))
        A[:, :3, 0] = 2.0 * X[:, :3]
        A[:, :, 1] = dF
    else:
        A = dF[:, :, None]
    lam = np.array([np.linalg.lstsq(a, -b, rcond=None)[0] for a, b in zip(A, grad)])
    kept = X[:, :3] if sys.eliminated == "position" else X[:, 3:]
    return np.column_stack([kept, lam])


def _random_multipliers(y: np.ndarray, sys: LagrangeSystem, settings: SolverSettings, n: int) -> np.ndarray:
    if n <= 0 or not len(y):
        return y[:0]
    lo, hi = settings.multiplier_range
    out = y[np.arange(n) % len(y)].copy()
    t = _sobol(2, n, settings.seed + 1)[:n]
    out[:, -1] = _signed_log(t[:, 0], lo, hi)
    if sys.euclidean:
        out[:, -2] = _signed_log(t[:, 1], lo, hi)
    return out


# solving ---------------------------------------------------------------------

def _validate(sys: LagrangeSystem, y: np.ndarray) -> Optional[CriticalPoint]:
    x, c = sys.recover(y)
    if not np.all(np.isfinite(x)) or abs(c) < 1e-12:
        return None
    if sys.euclidean:
        lam1, lam2 = float(y[3]), float(y[4])
        mult = (lam1, lam2)
    else:
        lam1, lam2 = 0.0, float(y[3])
        mult = (lam2,)
    grad = sys.gradient(x, lam1, lam2)
    cmax = sys.sigma.max_abs_coefficient()
    scale = 1.0 + max(1.0, cmax) * (1.0 + np.abs(x).max()) ** 3
    residual = float(np.abs(grad).max() / scale)
    if residual > RESIDUAL_REL:
        return None
    if abs(sys.sigma.evaluate(x)) > SIGMA_REL * max(sys.sigma.term_magnitude(x), cmax):
        return None
    mu = float(np.linalg.norm(x[:3]))
    if sys.euclidean and abs(mu - 1.0) > GAMMA_TOL:
        return None
    if mu < MIN_SCALE:
        return None
    pose = Pose(x[:3], x[3:])
    from .model import pose_distance

    dist = pose_distance(pose, sys.query, sys.metric)
    return CriticalPoint(pose, mult, dist, mu, residual, tuple(float(v) for v in y))


def _sort_key(cp: CriticalPoint):
    return (round(cp.distance, 10),) + tuple(np.round(cp.pose.as_vector(), 10))


def _converge(sys: LagrangeSystem, settings: SolverSettings):
    """Run both stages; return converged reduced roots and their residuals."""
    starts = start_points(sys, settings)
    args = sys.kernel_args()
    newton = kernels.get_backend(settings.backend).newton_batch
    Ye, re = _explicit.explicit_newton_batch(starts.explicit, starts.branch, *args)
    polish = Ye[np.isfinite(re) & np.all(np.isfinite(Ye), axis=1)]
    y0 = np.vstack([polish, starts.full])
    Y, resid, _, _ = newton(y0, *args, settings.max_iter, settings.tol)
    good = np.all(np.isfinite(Y), axis=1) & (resid <= RESIDUAL_REL)
    return Y[good], resid[good]


def solve_critical_points(sys: LagrangeSystem, budget: Optional[SolverSettings] = None) -> List[CriticalPoint]:
    """All real critical points found from the multi-start, ascending by distance."""
    settings = budget or SolverSettings()
    Y, _ = _converge(sys, settings)
    # canonical processing order keeps deduplication independent of start order
    Y = Y[np.lexsort(np.round(Y, 8).T[::-1])]
    found: List[CriticalPoint] = []
    for y in Y:
        if any(np.max(np.abs(np.asarray(cp.reduced) - y)) <= settings.dedup_atol for cp in found):
            continue
        cp = _validate(sys, y)
        if cp is not None:
            found.append(cp)
    found.sort(key=_sort_key)
    if settings.expected is not None and len(found) < settings.expected:
        raise BudgetExhausted(
            f"found {len(found)} of {settings.expected} expected critical points", partial=found
        )
    return found


def nearest_singular_pose(d: CanonicalDesign, g: Pose, mode=Mode.EUCLIDEAN,
                          budget: Optional[SolverSettings] = None) -> CriticalPoint:
    pts = solve_critical_points(build_lagrange(d, g, mode), budget)
    if not pts:
        raise BudgetExhausted("no real critical point found")
    return pts[0]


@dataclass(frozen=True)
class ZoneRadii:
    euclidean: CriticalPoint
    equiform: CriticalPoint


def singularity_free_radii(d: CanonicalDesign, g: Pose, budget: Optional[SolverSettings] = None) -> ZoneRadii:
    """Nearest singular poses under both motion groups.

    The equiform problem relaxes the Euclidean one, so its distance can
    never be larger; a violation means a root was missed and is reported.
    """
    eu = nearest_singular_pose(d, g, Mode.EUCLIDEAN, budget)
    eq = nearest_singular_pose(d, g, Mode.EQUIFORM, budget)
    if eq.distance > eu.distance + 1e-9:
        raise BudgetExhausted(
            f"equiform distance {eq.distance} exceeds Euclidean distance {eu.distance}",
            partial=[eu, eq],
        )
    return ZoneRadii(eu, eq)
