"""Bracket algebra on the architecture columns and architecture-singularity tests."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .model import COINCIDENCE_TOL, CanonicalDesign, Design

COLUMN_IDS = ("r", "X", "Y", "Z", "rX", "rY", "rZ")
RANK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ArchColumns:
    """The seven 4-vectors ``r, X, Y, Z, rX, rY, rZ`` over legs 2..5."""

    matrix: np.ndarray  # 4x7, columns ordered as COLUMN_IDS

    @classmethod
    def from_design(cls, design) -> "ArchColumns":
        if isinstance(design, CanonicalDesign):
            design = design.design
        b = design.base
        if np.any(b[0] != 0.0) or design.platform[0] != 0.0:
            raise ValueError("architecture columns need M_1 = 0 and r_1 = 0; canonicalize first")
        r, X, Y, Z = design.r, design.X, design.Y, design.Z
        mat = np.column_stack([r, X, Y, Z, r * X, r * Y, r * Z])
        mat.setflags(write=False)
        return cls(mat)

    def column(self, cid) -> np.ndarray:
        return self.matrix[:, column_index(cid)]

    def as_dict(self) -> Dict[str, np.ndarray]:
        return {c: self.matrix[:, k] for k, c in enumerate(COLUMN_IDS)}


def column_index(cid) -> int:
    if isinstance(cid, (int, np.integer)):
        if not 0 <= cid < 7:
            raise ValueError(f"column index out of range: {cid}")
        return int(cid)
    try:
        return COLUMN_IDS.index(cid)
    except ValueError:
        raise ValueError(f"unknown column id {cid!r}") from None


def architecture_matrix(design) -> np.ndarray:
    return ArchColumns.from_design(design).matrix


def bracket(a, b, c, d, cols: ArchColumns) -> float:
    """The 4x4 determinant ``[a, b, c, d]`` of four architecture columns."""
    idx = [column_index(x) for x in (a, b, c, d)]
    if len(set(idx)) < 4:
        return 0.0
    return float(np.linalg.det(cols.matrix[:, idx]))


def all_brackets(cols: ArchColumns) -> Dict[Tuple[str, str, str, str], float]:
    return {
        tuple(COLUMN_IDS[i] for i in combo): float(np.linalg.det(cols.matrix[:, list(combo)]))
        for combo in itertools.combinations(range(7), 4)
    }


def bracket_scale(cols: ArchColumns) -> float:
    """Largest Hadamard bound over all 35 brackets; a bracket is negligible relative to it."""
    norms = np.linalg.norm(cols.matrix, axis=0)
    return max(
        (float(np.prod(norms[list(c)])) for c in itertools.combinations(range(7), 4)),
        default=0.0,
    )


def architecture_rank(cols: ArchColumns, tol: float = RANK_TOL) -> int:
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = np.linalg.svd(cols.matrix, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def coplanarity_witness(cols: ArchColumns, tol: float = RANK_TOL) -> Optional[np.ndarray]:
    """Plane ``pi`` (homogeneous, unit norm) containing all seven column points, if any.

    Returns ``None`` exactly when the architecture matrix has full rank.
    """
    if architecture_rank(cols, tol) == 4:
        return None
    u, _, _ = np.linalg.svd(cols.matrix)
    plane = u[:, -1]
    # deterministic sign: first significant entry positive
    k = int(np.argmax(np.abs(plane) > 1e-12))
    return plane if plane[k] > 0 else -plane


class ArchStatus(enum.Enum):
    NOT_ARCH_SINGULAR = "not-architecture-singular"
    RANK_DEFICIENT = "rank-deficient"
    EXCEPTIONAL_TRIPLE_COINCIDENCE = "exceptional-triple-coincidence"
    EXCEPTIONAL_QUAD_COINCIDENCE = "exceptional-quad-coincidence"


@dataclass(frozen=True)
class ArchVerdict:
    status: ArchStatus
    rank: int
    witness: str = ""

    @property
    def singular(self) -> bool:
        return self.status is not ArchStatus.NOT_ARCH_SINGULAR


def architecture_verdict(d: CanonicalDesign, tol: float = RANK_TOL) -> ArchVerdict:
    """Decide whether the design is singular in every configuration.

    Rank deficiency of the architecture matrix is tested first, then the two
    coincidence patterns that are architecture singular despite full rank.
    """
    design = d.design if isinstance(d, CanonicalDesign) else d
    cols = ArchColumns.from_design(design)
    rank = architecture_rank(cols, tol)
    if rank < 4:
        return ArchVerdict(ArchStatus.RANK_DEFICIENT, rank, f"architecture matrix has rank {rank}")

    r, b = design.platform, design.base
    rtol = COINCIDENCE_TOL * max(design.platform_diameter(), 1e-300)
    btol = COINCIDENCE_TOL * max(design.base_diameter(), 1e-300)

    def same_platform(legs):
        return all(abs(r[legs[0]] - r[j]) <= rtol for j in legs[1:])

    legs = range(5)
    for trip in itertools.combinations(legs, 3):
        if not same_platform(trip):
            continue
        i, j = [k for k in legs if k not in trip]
        if np.linalg.norm(b[i] - b[j]) <= btol:
            names = ",".join(str(k + 1) for k in trip)
            return ArchVerdict(
                ArchStatus.EXCEPTIONAL_TRIPLE_COINCIDENCE,
                rank,
                f"m{names.replace(',', '=m')} and M{i + 1}=M{j + 1}",
            )
    for quad in itertools.combinations(legs, 4):
        if same_platform(quad):
            return ArchVerdict(
                ArchStatus.EXCEPTIONAL_QUAD_COINCIDENCE,
                rank,
                "=".join(f"m{k + 1}" for k in quad),
            )
    return ArchVerdict(ArchStatus.NOT_ARCH_SINGULAR, rank)
