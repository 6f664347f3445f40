"""Designs, poses, the canonical frame and the line-element metric."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import NoDistinctPlatformPair, NoTriangle, NotUnit

NLEGS = 5
PLANAR_TOL = 1e-9
COINCIDENCE_TOL = 1e-9
UNIT_TOL = 1e-9


def _as_base(base) -> np.ndarray:
    arr = np.array(base, dtype=float)
    if arr.shape != (NLEGS, 3):
        raise ValueError(f"base must be five 3-vectors, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("base coordinates must be finite")
    arr.setflags(write=False)
    return arr


def _as_platform(platform) -> np.ndarray:
    arr = np.array(platform, dtype=float)
    if arr.shape != (NLEGS,):
        raise ValueError(f"platform must be five scalars, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("platform offsets must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Design:
    """Five base anchor points ``M_j`` and platform offsets ``r_j`` along the platform line."""

    base: np.ndarray
    platform: np.ndarray
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "base", _as_base(self.base))
        object.__setattr__(self, "platform", _as_platform(self.platform))

    def __eq__(self, other):
        if not isinstance(other, Design):
            return NotImplemented
        return np.array_equal(self.base, other.base) and np.array_equal(
            self.platform, other.platform
        )

    def __hash__(self):
        return hash((self.base.tobytes(), self.platform.tobytes()))

    @property
    def X(self):
        return self.base[1:, 0]

    @property
    def Y(self):
        return self.base[1:, 1]

    @property
    def Z(self):
        return self.base[1:, 2]

    @property
    def r(self):
        return self.platform[1:]

    def base_diameter(self) -> float:
        d = self.base[:, None, :] - self.base[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    def platform_diameter(self) -> float:
        return float(self.platform.max() - self.platform.min())

    def permuted(self, perm: Sequence[int]) -> "Design":
        perm = list(perm)
        return Design(self.base[perm], self.platform[perm], self.name)

    def allclose(self, other: "Design", atol: float = 1e-10) -> bool:
        return np.allclose(self.base, other.base, atol=atol, rtol=0) and np.allclose(
            self.platform, other.platform, atol=atol, rtol=0
        )


@dataclass(frozen=True)
class Provenance:
    """How a design was mapped into the canonical frame.

    A canonical base point is ``rotation @ (M[perm[j]] - origin)`` and a
    canonical offset is ``(r[perm[j]] - offset) / scale``.
    """

    permutation: Tuple[int, ...] = tuple(range(NLEGS))
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    offset: float = 0.0
    scale: float = 1.0

    def is_identity(self) -> bool:
        return (
            tuple(self.permutation) == tuple(range(NLEGS))
            and np.array_equal(self.rotation, np.eye(3))
            and not np.any(self.origin)
            and self.offset == 0.0
            and self.scale == 1.0
        )

    def apply(self, design: Design) -> Design:
        d = design.permuted(self.permutation)
        base = (d.base - self.origin) @ self.rotation.T
        platform = (d.platform - self.offset) / self.scale
        return Design(base, platform, design.name)

    def map_pose(self, pose: "Pose") -> "Pose":
        """Express a pose of the original design in the canonical frame.

        The orientation is multiplied by ``scale``; a Euclidean pose stays
        Euclidean only when the scale is 1.
        """
        o = pose.orientation
        p = self.rotation @ (pose.position - self.origin + self.offset * o)
        return Pose(self.scale * (self.rotation @ o), p)


@dataclass(frozen=True, eq=False)
class CanonicalDesign:
    """A design with ``M_1 = 0``, ``M_2`` on the x-axis, ``M_3`` in the xy-plane, ``r_1 = 0``, ``r_2 = 1``."""

    design: Design
    provenance: Provenance = field(default_factory=Provenance)

    @property
    def base(self):
        return self.design.base

    @property
    def platform(self):
        return self.design.platform

    @property
    def name(self):
        return self.design.name

    @property
    def is_planar(self) -> bool:
        diam = self.design.base_diameter()
        z = np.abs(self.design.base[3:, 2])
        return bool(np.all(z < PLANAR_TOL * diam))

    @property
    def X(self):
        return self.design.X

    @property
    def Y(self):
        return self.design.Y

    @property
    def Z(self):
        return self.design.Z

    @property
    def r(self):
        return self.design.r

    def base_diameter(self) -> float:
        return self.design.base_diameter()

    def platform_diameter(self) -> float:
        return self.design.platform_diameter()


@dataclass(frozen=True, eq=False)
class Pose:
    """Orientation ``(u, v, w)`` and position ``(px, py, pz)`` of the platform line."""

    orientation: np.ndarray
    position: np.ndarray

    def __post_init__(self):
        o = np.array(self.orientation, dtype=float).reshape(3)
        p = np.array(self.position, dtype=float).reshape(3)
        if not (np.all(np.isfinite(o)) and np.all(np.isfinite(p))):
            raise ValueError("pose coordinates must be finite")
        o.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "orientation", o)
        object.__setattr__(self, "position", p)

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "Pose":
        x = np.asarray(x, dtype=float)
        if x.shape != (6,):
            raise ValueError("pose vector must have six entries")
        return cls(x[:3], x[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.orientation, self.position])

    @property
    def scale(self) -> float:
        """Equiform scale factor ``mu``; equals 1 for Euclidean poses."""
        return float(np.linalg.norm(self.orientation))

    def is_euclidean(self, tol: float = 1e-12) -> bool:
        return abs(self.orientation @ self.orientation - 1.0) <= tol

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.as_vector(), other.as_vector())

    def __hash__(self):
        return hash(self.as_vector().tobytes())

    def __repr__(self):
        return "Pose(" + ", ".join(f"{x:.8f}" for x in self.as_vector()) + ")"


@dataclass(frozen=True)
class MetricCoefficients:
    """Mean offset and mean squared offset over all five legs."""

    mean_offset: float
    mean_square: float

    @classmethod
    def from_design(cls, design) -> "MetricCoefficients":
        r = np.asarray(design.platform, dtype=float)
        return cls(float(r.mean()), float((r**2).mean()))

    def matrix(self) -> np.ndarray:
        """The 6x6 Gram matrix ``W`` with ``d^2 = dx^T W dx`` for ``dx = (di, dp)``."""
        eye = np.eye(3)
        return np.block(
            [[self.mean_square * eye, self.mean_offset * eye], [self.mean_offset * eye, eye]]
        )


def pose_distance(a: Pose, b: Pose, m: MetricCoefficients) -> float:
    dp = a.position - b.position
    di = a.orientation - b.orientation
    d2 = dp @ dp + 2.0 * m.mean_offset * (dp @ di) + m.mean_square * (di @ di)
    return math.sqrt(max(d2, 0.0))


def anchor_distance(a: Pose, b: Pose, platform: Sequence[float]) -> float:
    """Root mean square displacement of the five platform anchor points."""
    r = np.asarray(platform, dtype=float)[:, None]
    ma = a.position + r * a.orientation
    mb = b.position + r * b.orientation
    return math.sqrt(((ma - mb) ** 2).sum() / len(r))


def spherical_distance(o1, o2) -> float:
    """Great-circle angle between two unit vectors, in degrees."""
    a = np.asarray(o1, dtype=float)
    b = np.asarray(o2, dtype=float)
    for vec in (a, b):
        if abs(np.linalg.norm(vec) - 1.0) > UNIT_TOL:
            raise NotUnit(f"not a unit vector: {vec}")
    # atan2 form keeps full accuracy near 0 and 180 degrees
    return math.degrees(math.atan2(np.linalg.norm(np.cross(a, b)), float(a @ b)))


# canonical frame -------------------------------------------------------------

def _is_triangle(p0, p1, p2, diam) -> bool:
    area2 = np.linalg.norm(np.cross(p1 - p0, p2 - p0))
    return area2 > PLANAR_TOL * diam * diam


def _already_canonical(d: Design) -> bool:
    b, r = d.base, d.platform
    diam = d.base_diameter()
    tol = PLANAR_TOL * diam
    return (
        np.all(b[0] == 0.0)
        and b[1, 1] == 0.0
        and b[1, 2] == 0.0
        and b[2, 2] == 0.0
        and abs(b[1, 0]) > tol
        and abs(b[2, 1]) > tol
        and r[0] == 0.0
        and r[1] == 1.0
    )


def _frame_rotation(p0, p1, p2) -> np.ndarray:
    e1 = p1 - p0
    e1 = e1 / np.linalg.norm(e1)
    t = (p2 - p0) - ((p2 - p0) @ e1) * e1
    e2 = t / np.linalg.norm(t)
    e3 = np.cross(e1, e2)
    return np.vstack([e1, e2, e3])


def canonicalize(design: Design) -> CanonicalDesign:
    """Bring ``design`` into the canonical frame.

    The first leg permutation (in lexicographic order) whose first three
    base points form a triangle and whose first two platform points differ
    is used. A design that already satisfies the canonical conditions is
    returned unchanged with identity provenance; otherwise the rotation
    puts ``M_2`` on the positive x-axis and ``M_3`` in the upper half of
    the xy-plane.

    Raises
    ------
    NoTriangle
        All base points are collinear.
    NoDistinctPlatformPair
        No base triangle has two distinct corresponding platform points.
    """
    if _already_canonical(design):
        return CanonicalDesign(design, Provenance())

    diam = design.base_diameter()
    pdiam = design.platform_diameter()
    b, r = design.base, design.platform
    has_triangle = any(
        _is_triangle(b[i], b[j], b[k], diam) for i, j, k in itertools.combinations(range(NLEGS), 3)
    )
    if diam == 0.0 or not has_triangle:
        raise NoTriangle("all base points are collinear")
    if pdiam == 0.0:
        raise NoDistinctPlatformPair("all platform points coincide")

    for perm in itertools.permutations(range(NLEGS)):
        i, j, k = perm[:3]
        if abs(r[i] - r[j]) <= COINCIDENCE_TOL * pdiam:
            continue
        if not _is_triangle(b[i], b[j], b[k], diam):
            continue
        rot = _frame_rotation(b[i], b[j], b[k])
        prov = Provenance(
            permutation=tuple(perm),
            rotation=rot,
            origin=b[i].copy(),
            offset=float(r[i]),
            scale=float(r[j] - r[i]),
        )
        canon = prov.apply(design)
        # the frame pins these coordinates exactly
        base = canon.base.copy()
        base[0] = 0.0
        base[1, 1:] = 0.0
        base[2, 2] = 0.0
        platform = canon.platform.copy()
        platform[0], platform[1] = 0.0, 1.0
        return CanonicalDesign(Design(base, platform, design.name), prov)

    raise NoDistinctPlatformPair(
        "no base triangle with two distinct platform points (four or more platform points coincide)"
    )


# design files ----------------------------------------------------------------

Number = Union[int, float, str]


def parse_number(value: Number) -> Fraction | float:
    """Parse a JSON number or an exact fraction string such as ``"-1/2"``."""
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("non-finite number")
        return value
    if isinstance(value, str):
        text = value.strip().replace("−", "-")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"cannot parse number {value!r}") from None
    raise ValueError(f"cannot parse number {value!r}")


def design_from_dict(data: dict) -> Tuple[Design, dict]:
    if not isinstance(data, dict):
        raise ValueError("design file must contain a JSON object")
    try:
        base_raw = data["base"]
        plat_raw = data["platform"]
    except KeyError as exc:
        raise ValueError(f"missing key {exc.args[0]!r}") from None
    if not isinstance(base_raw, list) or len(base_raw) != NLEGS:
        raise ValueError("'base' must be a list of five points")
    if not isinstance(plat_raw, list) or len(plat_raw) != NLEGS:
        raise ValueError("'platform' must be a list of five offsets")
    base = []
    for pt in base_raw:
        if not isinstance(pt, list) or len(pt) != 3:
            raise ValueError("each base point must have three coordinates")
        base.append([float(parse_number(c)) for c in pt])
    platform = [float(parse_number(c)) for c in plat_raw]
    meta = {k: data[k] for k in ("name", "description") if k in data}
    return Design(base, platform, meta.get("name")), meta


def load_design(path) -> Tuple[Design, dict]:
    text = Path(path).read_text(encoding="utf-8")
    return design_from_dict(json.loads(text))


def design_to_dict(design: Design, description: Optional[str] = None) -> dict:
    out = {
        "base": [[float(c) for c in pt] for pt in design.base],
        "platform": [float(c) for c in design.platform],
    }
    if design.name is not None:
        out["name"] = design.name
    if description is not None:
        out["description"] = description
    return out


def dump_design(design: Design, path=None, description: Optional[str] = None) -> str:
    text = json.dumps(design_to_dict(design, description), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
