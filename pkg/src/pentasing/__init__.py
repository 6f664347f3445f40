"""Singularity analysis of linear pentapods.

A linear pentapod carries five anchor points on a line platform, each
joined by a leg to a base point. Its singular poses are the zeros of one
polynomial ``det(S)`` of degree three in the orientation ``(u, v, w)`` and
position ``(px, py, pz)`` of the platform line. This package builds that
polynomial, recognizes the designs for which it is linear in position or
in orientation, and computes the nearest singular pose to a query, either
in closed form (orientation or position held fixed) or by solving the
Lagrange system of the distance minimization.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ArchitectureSingularResult,
    BudgetExhausted,
    DegenerateRestriction,
    DesignError,
    InfinitePedalSet,
    PentapodError,
    SingularQuery,
    UnsupportedFamily,
)
from .model import (  # noqa: E402
    CanonicalDesign,
    Design,
    MetricCoefficients,
    Pose,
    canonicalize,
    load_design,
    pose_distance,
    spherical_distance,
)
from .sigma import sigma_polynomial  # noqa: E402
from .classify import Classification, Verdict, classify  # noqa: E402
from .pedal import PedalSolution, fixed_orientation_pedals, fixed_position_pedals  # noqa: E402
from .optimize import (  # noqa: E402
    CriticalPoint,
    Mode,
    SolverSettings,
    build_lagrange,
    nearest_singular_pose,
    solve_critical_points,
)

__all__ = [
    "ArchitectureSingularResult", "BudgetExhausted", "CanonicalDesign", "Classification",
    "CriticalPoint", "DegenerateRestriction", "Design", "DesignError", "InfinitePedalSet",
    "MetricCoefficients", "Mode", "PedalSolution", "PentapodError", "Pose", "SingularQuery",
    "SolverSettings", "UnsupportedFamily", "Verdict", "build_lagrange", "canonicalize",
    "classify", "fixed_orientation_pedals", "fixed_position_pedals", "load_design",
    "nearest_singular_pose", "pose_distance", "sigma_polynomial", "solve_critical_points",
    "spherical_distance",
]
