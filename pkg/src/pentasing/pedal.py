"""Nearest singular pose with either the orientation or the position held fixed.

With the orientation fixed the singular positions form one plane or a pair
of planes, and the nearest one is a Euclidean foot point. With the position
fixed the singular orientations are the intersection of the unit sphere
with one or two planes: great or small circles whose nearest points to the
query orientation are found by normalized projection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import DegenerateRestriction, InfinitePedalSet, NotFactorable, SingularQuery, UnsupportedFamily
from .model import CanonicalDesign, Pose, canonicalize, spherical_distance
from .poly import MultiPoly
from .sigma import factor_planes, restrict_orientation, restrict_position, sigma_polynomial

SINGULAR_REL = 1e-10
TANGENCY_BAND = 1e-9
NORMAL_ANGLE_TOL = 1e-8
LINEAR_REL = 1e-9


@dataclass(frozen=True)
class PedalSolution:
    pose: Pose
    distance: float
    branch: str
    infinite: bool = False

    def _key(self):
        return (self.distance, tuple(self.pose.as_vector()))


def _prepare(d, g: Pose):
    if not isinstance(d, CanonicalDesign):
        d = canonicalize(d)
    sig = sigma_polynomial(d)
    if sig.is_zero():
        raise UnsupportedFamily("singularity polynomial vanishes identically (architecture singular)")
    x = g.as_vector()
    if abs(sig.evaluate(x)) <= SINGULAR_REL * max(sig.term_magnitude(x), 1e-300):
        raise SingularQuery("query pose lies on the singularity variety")
    return d, sig


def affine_form(q: MultiPoly, group: Sequence[int]) -> np.ndarray:
    """Coefficients ``(A1, A2, A3, A4)`` of an affine polynomial in three variables."""
    A = np.zeros(4)
    for e, c in q.terms.items():
        k = [j for j in group if e[j]]
        if not k:
            A[3] += c
        else:
            A[group.index(k[0])] += c
    return A


def _sorted(sols: List[PedalSolution]) -> List[PedalSolution]:
    return sorted(sols, key=PedalSolution._key)


# restricted varieties --------------------------------------------------------

def position_planes(sig: MultiPoly, orientation, scale: float = 0.0):
    """Singular positions at a fixed orientation as ``[(branch, (A1, A2, A3, A4)), ...]``."""
    q = restrict_orientation(sig, orientation)
    if q.is_zero() or q.max_abs_coefficient() <= LINEAR_REL * scale:
        raise DegenerateRestriction("every position is singular at this orientation")
    if q.position_degree(LINEAR_REL) <= 1:
        return [("plane", affine_form(q.pruned(LINEAR_REL), [3, 4, 5]))]
    try:
        pair = factor_planes(q, "pz")
    except NotFactorable:
        raise UnsupportedFamily(
            "restriction to a fixed orientation is neither linear nor a pair of planes"
        ) from None
    return [("plane:pz=0", np.append(pair.fixed_factor, 0.0)), ("plane:affine", pair.affine)]


def orientation_planes(sig: MultiPoly, position, scale: float = 0.0):
    """Planes whose intersections with the unit sphere are the singular orientations at a fixed position."""
    q = restrict_position(sig, position)
    if q.is_zero() or q.max_abs_coefficient() <= LINEAR_REL * scale:
        raise DegenerateRestriction("every orientation is singular at this position")
    if q.orientation_degree(LINEAR_REL) <= 1:
        return [("great-circle", affine_form(q.pruned(LINEAR_REL), [0, 1, 2]))]
    try:
        pair = factor_planes(q, "w")
    except NotFactorable:
        raise UnsupportedFamily(
            "restriction to a fixed position is neither linear nor a pair of planes"
        ) from None
    second = "small-circle" if pair.affine[3] != 0.0 else "great-circle:affine"
    return [("great-circle", np.append(pair.fixed_factor, 0.0)), (second, pair.affine)]


# fixed orientation -----------------------------------------------------------

def _foot(p0: np.ndarray, A: np.ndarray) -> np.ndarray:
    n = A[:3]
    return p0 - (n @ p0 + A[3]) / (n @ n) * n


def fixed_orientation_pedals(d: CanonicalDesign, g: Pose) -> List[PedalSolution]:
    """Singular poses sharing ``g``'s orientation, nearest position first.

    Raises
    ------
    SingularQuery, UnsupportedFamily, DegenerateRestriction
    """
    d, sig = _prepare(d, g)
    planes = position_planes(sig, g.orientation, sig.term_magnitude(g.as_vector()))
    p0 = g.position
    out = []
    for branch, A in planes:
        if A[:3] @ A[:3] == 0.0:
            if A[3] == 0.0:
                raise DegenerateRestriction("a factor of the restriction vanishes identically")
            continue  # constant nonzero factor has no zeros
        foot = _foot(p0, A)
        out.append(PedalSolution(Pose(g.orientation, foot), float(np.linalg.norm(foot - p0)), branch))
    return _sorted(out)


# fixed position --------------------------------------------------------------

def _circle_pedals(o: np.ndarray, A: np.ndarray, branch: str) -> List[np.ndarray]:
    """Nearest and farthest points of ``{A[:3].i + A[3] = 0, |i| = 1}`` seen from ``o``."""
    n2 = float(A[:3] @ A[:3])
    if n2 == 0.0:
        return []
    nrm = math.sqrt(n2)
    nhat = A[:3] / nrm
    h = -A[3] / nrm
    gap = A[3] ** 2 - n2
    if abs(gap) < TANGENCY_BAND * n2:
        return [np.sign(h) * nhat]  # tangent plane touches the sphere once
    if gap > 0:
        return []
    t = o - (o @ nhat) * nhat
    tn = float(np.linalg.norm(t))
    if math.atan2(tn, abs(float(o @ nhat))) < NORMAL_ANGLE_TOL:
        raise InfinitePedalSet(
            f"query orientation is normal to the {branch} plane; every point of the circle is a pedal"
        )
    rho = math.sqrt(max(1.0 - h * h, 0.0))
    centre = h * nhat
    return [centre + rho * t / tn, centre - rho * t / tn]


def fixed_position_pedals(d: CanonicalDesign, g: Pose) -> List[PedalSolution]:
    """Singular orientations at ``g``'s position, nearest (in degrees) first.

    Position-linear designs give a great circle and the intersection of an
    affine plane with the sphere: 4, 3 or 2 pedals when the plane cuts,
    touches or misses the sphere. Orientation-linear designs give one great
    circle and two antipodal pedals.
    """
    d, sig = _prepare(d, g)
    o = g.orientation
    if abs(float(o @ o) - 1.0) > 1e-9:
        raise ValueError("fixed-position pedals need a unit query orientation")
    planes = orientation_planes(sig, g.position, sig.term_magnitude(g.as_vector()))
    out = []
    for branch, A in planes:
        if A[:3] @ A[:3] == 0.0:
            if A[3] == 0.0:
                raise DegenerateRestriction("a factor of the restriction vanishes identically")
            continue
        pts = _circle_pedals(o, A, branch)
        label = "tangent-point" if len(pts) == 1 else branch
        for i in pts:
            i = i / np.linalg.norm(i)
            out.append(PedalSolution(Pose(i, g.position), spherical_distance(o, i), label))
    return _sorted(out)


def sphere_case(d: CanonicalDesign, g: Pose) -> str:
    """'a', 'b' or 'c' as the affine factor cuts, touches or misses the unit sphere."""
    d, sig = _prepare(d, g)
    q = restrict_position(sig, g.position)
    try:
        return factor_planes(q, "w").classify_sphere(TANGENCY_BAND)
    except NotFactorable:
        raise UnsupportedFamily("restriction does not split into two planes") from None
