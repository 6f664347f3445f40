"""The singularity polynomial det(S) and its restrictions.

``S`` is the 7x7 matrix whose first three rows hold the pose variables and
whose last four rows are the architecture matrix::

    [1, u,  v,  w,  px, py, pz]
    [0, px, py, pz, 0,  0,  0 ]
    [0, 0,  0,  0,  u,  v,  w ]
    [r_j, x_j, y_j, z_j, r_j x_j, r_j y_j, r_j z_j]   j = 2..5

Rows and columns are numbered from 1 in the public API, matching the
usual sub-matrix notation ``S_{rows}^{cols}``.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .brackets import ArchColumns, bracket_scale
from .errors import DimensionMismatch, NotFactorable
from .model import CanonicalDesign, Pose
from .poly import NVARS, MultiPoly, poly_det, var_index

# coefficients below this fraction of the bracket scale are rounding noise
ZERO_REL = 1e-14
FACTOR_REL = 1e-9


def _pose_rows():
    one = MultiPoly.constant(1.0)
    zero = MultiPoly()
    u, v, w, px, py, pz = (MultiPoly.variable(k) for k in range(NVARS))
    return [
        [one, u, v, w, px, py, pz],
        [zero, px, py, pz, zero, zero, zero],
        [zero, zero, zero, zero, u, v, w],
    ]


_POSE_ROWS = _pose_rows()


def _det3(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


_POSE_MINORS = {
    cols: _det3([[row[c] for c in cols] for row in _POSE_ROWS])
    for cols in itertools.combinations(range(7), 3)
}


def _design(d):
    return d.design if isinstance(d, CanonicalDesign) else d


def sigma_polynomial(d: CanonicalDesign) -> MultiPoly:
    """det(S) as a sparse polynomial.

    Laplace expansion along the three pose rows: every 3-column subset
    ``C`` contributes ``(-1)^(1+2+3 + sum(C)) * det(pose rows, C)`` times the
    bracket of the four complementary architecture columns (1-based column
    numbers in the sign). Pruning is relative to the largest Hadamard bound
    of the brackets, so an architecture-singular design yields exactly the
    zero polynomial.
    """
    cols = ArchColumns.from_design(_design(d))
    A = cols.matrix
    scale = bracket_scale(cols)
    acc = MultiPoly()
    for C, minor in _POSE_MINORS.items():
        if minor.is_zero():
            continue
        comp = [k for k in range(7) if k not in C]
        br = float(np.linalg.det(A[:, comp]))
        if abs(br) <= ZERO_REL * scale:
            continue
        sign = -1.0 if (6 + sum(c + 1 for c in C)) % 2 else 1.0
        acc = acc + minor * (sign * br)
    return acc.pruned(absolute=ZERO_REL * scale)


def s_matrix(d, pose) -> np.ndarray:
    """Numeric 7x7 matrix ``S`` at a pose (6-vector or :class:`Pose`)."""
    x = pose.as_vector() if isinstance(pose, Pose) else np.asarray(pose, dtype=float)
    u, v, w, px, py, pz = x
    A = ArchColumns.from_design(_design(d)).matrix
    top = np.array(
        [
            [1.0, u, v, w, px, py, pz],
            [0.0, px, py, pz, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, u, v, w],
        ]
    )
    return np.vstack([top, A])


def direct_determinant(d, pose) -> float:
    return float(np.linalg.det(s_matrix(d, pose)))


def evaluate(p: MultiPoly, pose) -> float:
    x = pose.as_vector() if isinstance(pose, Pose) else np.asarray(pose, dtype=float)
    return p.evaluate(x)


class Target(enum.Enum):
    POSITION_LINEAR = "position-linear"
    ORIENTATION_LINEAR = "orientation-linear"
    QUADRATIC_TOTAL = "quadratic-total"


def undesired_polynomial(d: CanonicalDesign, target: Union[Target, str], sigma: Optional[MultiPoly] = None) -> MultiPoly:
    """Terms of det(S) that must vanish for the requested degree reduction."""
    target = Target(target)
    sig = sigma_polynomial(d) if sigma is None else sigma
    if target is Target.POSITION_LINEAR:
        return sig.select(lambda e: e[3] + e[4] + e[5] == 2)
    if target is Target.ORIENTATION_LINEAR:
        return sig.select(lambda e: e[0] + e[1] + e[2] == 2)
    return sig.select(lambda e: sum(e) == 3)


def symbolic_s(d) -> list:
    """``S`` as a matrix of polynomials."""
    A = ArchColumns.from_design(_design(d)).matrix
    rows = [list(r) for r in _POSE_ROWS]
    for i in range(4):
        rows.append([MultiPoly.constant(float(A[i, k])) for k in range(7)])
    return rows


def minor(d: CanonicalDesign, removed_rows: Iterable[int], removed_cols: Iterable[int]):
    """Determinant of ``S`` with the given 1-based rows and columns deleted.

    Returns a float when all three pose rows are deleted, otherwise a
    :class:`MultiPoly`.
    """
    rows = sorted(set(int(r) for r in removed_rows))
    cols = sorted(set(int(c) for c in removed_cols))
    if len(rows) != len(cols):
        raise DimensionMismatch(
            f"removed {len(rows)} rows but {len(cols)} columns"
        )
    if any(not 1 <= k <= 7 for k in rows + cols):
        raise DimensionMismatch("row and column numbers must lie in 1..7")
    keep_r = [k for k in range(7) if k + 1 not in rows]
    keep_c = [k for k in range(7) if k + 1 not in cols]
    if all(k >= 3 for k in keep_r):
        A = ArchColumns.from_design(_design(d)).matrix
        sub = A[np.ix_([k - 3 for k in keep_r], keep_c)]
        return float(np.linalg.det(sub)) if len(keep_r) else 1.0
    S = symbolic_s(d)
    sub = [[S[i][j] for j in keep_c] for i in keep_r]
    return poly_det(sub)


def restrict_orientation(p: MultiPoly, o: Sequence[float]) -> MultiPoly:
    """Substitute a fixed orientation; the result depends on position only."""
    u, v, w = (float(c) for c in o)
    return p.substitute({"u": u, "v": v, "w": w})


def restrict_position(p: MultiPoly, pos: Sequence[float]) -> MultiPoly:
    """Substitute a fixed position; the result depends on orientation only."""
    x, y, z = (float(c) for c in pos)
    return p.substitute({"px": x, "py": y, "pz": z})


@dataclass(frozen=True)
class PlanePair:
    """``q = fixed_factor . vars * (affine[0:3] . vars + affine[3])``.

    ``fixed_factor`` is the linear form (a 3-vector over the variable group
    of the distinguished variable); ``affine`` holds ``(A1, A2, A3, A4)``.
    """

    variables: tuple
    fixed_factor: np.ndarray
    affine: np.ndarray

    def normal(self) -> np.ndarray:
        return self.affine[:3]

    def classify_sphere(self, band: float = 1e-9) -> str:
        """Position of the affine plane relative to the unit sphere: 'a' cuts, 'b' touches, 'c' misses."""
        n2 = float(self.affine[:3] @ self.affine[:3])
        a4 = float(self.affine[3]) ** 2
        if abs(a4 - n2) < band * n2:
            return "b"
        return "a" if a4 < n2 else "c"

    def to_poly(self) -> MultiPoly:
        idx = [var_index(v) for v in self.variables]
        lin = MultiPoly()
        aff = MultiPoly.constant(float(self.affine[3]))
        for k, vi in enumerate(idx):
            x = MultiPoly.variable(vi)
            lin = lin + x * float(self.fixed_factor[k])
            aff = aff + x * float(self.affine[k])
        return lin * aff


def factor_planes(q: MultiPoly, distinguished) -> PlanePair:
    """Split ``q`` as (distinguished variable) x (affine form).

    The affine form lives in the variable group of the distinguished
    variable: orientation for ``w``, position for ``pz``.
    """
    k = var_index(distinguished)
    group = (0, 1, 2) if k < 3 else (3, 4, 5)
    names = tuple(("u", "v", "w", "px", "py", "pz")[g] for g in group)
    scale = q.max_abs_coefficient()
    if scale == 0.0:
        raise NotFactorable("polynomial is identically zero")
    affine = np.zeros(4)
    for e, c in q.terms.items():
        if abs(c) <= FACTOR_REL * scale:
            continue
        if any(e[j] for j in range(NVARS) if j not in group):
            raise NotFactorable("polynomial involves variables outside the factor group")
        if e[k] == 0:
            raise NotFactorable(f"monomial {e} is not divisible by {names[group.index(k)]}")
        rest = list(e)
        rest[k] -= 1
        deg = sum(rest)
        if deg == 0:
            affine[3] += c
        elif deg == 1:
            affine[group.index(int(np.argmax(rest)))] += c
        else:
            raise NotFactorable("quotient is not affine")
    fixed = np.zeros(3)
    fixed[group.index(k)] = 1.0
    return PlanePair(names, fixed, affine)
