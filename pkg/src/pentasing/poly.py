"""Sparse multivariate polynomials in the six pose variables.

Variables are ordered ``(u, v, w, px, py, pz)``; a monomial is stored as an
exponent 6-tuple mapped to its coefficient.
"""
from __future__ import annotations

from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np

VARIABLES = ("u", "v", "w", "px", "py", "pz")
ORIENTATION = (0, 1, 2)
POSITION = (3, 4, 5)
NVARS = 6
PRUNE_REL = 1e-14

Exponent = Tuple[int, int, int, int, int, int]


def var_index(name) -> int:
    if isinstance(name, int):
        if not 0 <= name < NVARS:
            raise ValueError(f"variable index out of range: {name}")
        return name
    try:
        return VARIABLES.index(name)
    except ValueError:
        raise ValueError(f"unknown variable {name!r}") from None


class MultiPoly:
    """Immutable sparse polynomial over ``(u, v, w, px, py, pz)``.

    Coefficients whose magnitude falls below ``prune`` times the largest
    coefficient are dropped at construction (pass ``prune=0`` to keep
    everything that is exactly nonzero).
    """

    __slots__ = ("_terms", "_arrays")

    def __init__(self, terms: Mapping[Exponent, float] | None = None, prune: float = PRUNE_REL):
        clean: Dict[Exponent, float] = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != NVARS or min(exp) < 0:
                    raise ValueError(f"bad exponent tuple {exp}")
                c = float(c)
                if c != 0.0:
                    clean[exp] = clean.get(exp, 0.0) + c
            if clean:
                cmax = max(abs(c) for c in clean.values())
                cut = prune * cmax
                clean = {e: c for e, c in clean.items() if abs(c) > cut and c != 0.0}
        self._terms = clean
        self._arrays = None

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, c: float) -> "MultiPoly":
        return cls({(0,) * NVARS: c})

    @classmethod
    def variable(cls, name) -> "MultiPoly":
        exp = [0] * NVARS
        exp[var_index(name)] = 1
        return cls({tuple(exp): 1.0})

    @classmethod
    def zero(cls) -> "MultiPoly":
        return cls()

    # container protocol -------------------------------------------------
    @property
    def terms(self) -> Dict[Exponent, float]:
        return dict(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms.items()))

    def __repr__(self):
        return f"MultiPoly({self.to_text()})"

    def is_zero(self) -> bool:
        return not self._terms

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, MultiPoly):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return MultiPoly.constant(float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0.0) + c
        return MultiPoly(out, prune=0.0)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly({e: -c for e, c in self._terms.items()}, prune=0.0)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return MultiPoly({e: c * float(other) for e, c in self._terms.items()}, prune=0.0)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        out: Dict[Exponent, float] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return MultiPoly(out, prune=0.0)

    __rmul__ = __mul__

    def pruned(self, rel: float = PRUNE_REL, absolute: float = 0.0) -> "MultiPoly":
        cut = max(rel * self.max_abs_coefficient(), absolute)
        return MultiPoly({e: c for e, c in self._terms.items() if abs(c) > cut}, prune=0.0)

    def allclose(self, other: "MultiPoly", rtol: float = 1e-9) -> bool:
        scale = max(self.max_abs_coefficient(), other.max_abs_coefficient())
        diff = self - other
        return diff.max_abs_coefficient() <= rtol * scale

    # degree queries -----------------------------------------------------
    def _significant(self, rel_tol):
        cut = rel_tol * self.max_abs_coefficient()
        return [e for e, c in self._terms.items() if abs(c) > cut]

    def total_degree(self, rel_tol: float = 0.0) -> int:
        return max((sum(e) for e in self._significant(rel_tol)), default=-1)

    def orientation_degree(self, rel_tol: float = 0.0) -> int:
        return max((e[0] + e[1] + e[2] for e in self._significant(rel_tol)), default=-1)

    def position_degree(self, rel_tol: float = 0.0) -> int:
        return max((e[3] + e[4] + e[5] for e in self._significant(rel_tol)), default=-1)

    def select(self, predicate) -> "MultiPoly":
        """Sub-polynomial made of the terms whose exponent satisfies ``predicate``."""
        return MultiPoly({e: c for e, c in self._terms.items() if predicate(e)}, prune=0.0)

    # calculus and substitution -----------------------------------------
    def derivative(self, var) -> "MultiPoly":
        k = var_index(var)
        out = {}
        for e, c in self._terms.items():
            if e[k]:
                ne = list(e)
                ne[k] -= 1
                out[tuple(ne)] = c * e[k]
        return MultiPoly(out, prune=0.0)

    def substitute(self, values: Mapping) -> "MultiPoly":
        """Replace the given variables by numbers; their exponents become zero."""
        idx = {var_index(k): float(v) for k, v in values.items()}
        out: Dict[Exponent, float] = {}
        for e, c in self._terms.items():
            ne = list(e)
            for k, val in idx.items():
                if ne[k]:
                    c *= val ** ne[k]
                    ne[k] = 0
            ne = tuple(ne)
            out[ne] = out.get(ne, 0.0) + c
        return MultiPoly(out)

    # evaluation ---------------------------------------------------------
    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Exponents ``(m, 6)`` and coefficients ``(m,)`` in sorted term order."""
        if self._arrays is None:
            items = sorted(self._terms.items())
            exps = np.array([e for e, _ in items], dtype=np.int64).reshape(-1, NVARS)
            coefs = np.array([c for _, c in items], dtype=float)
            self._arrays = (exps, coefs)
        return self._arrays

    def __call__(self, point: Sequence[float]) -> float:
        return self.evaluate(point)

    def evaluate(self, point: Sequence[float]) -> float:
        x = np.asarray(point, dtype=float)
        if x.shape != (NVARS,):
            raise ValueError("evaluation point must have six coordinates")
        total = 0.0
        for e, c in sorted(self._terms.items()):
            term = c
            for k in range(NVARS):
                if e[k]:
                    term *= x[k] ** e[k]
            total += term
        return total

    def term_magnitude(self, point: Sequence[float]) -> float:
        """Sum of absolute term values at ``point``; the natural scale of a value."""
        x = np.abs(np.asarray(point, dtype=float))
        total = 0.0
        for e, c in self._terms.items():
            term = abs(c)
            for k in range(NVARS):
                if e[k]:
                    term *= x[k] ** e[k]
            total += term
        return total

    def evaluate_many(self, points) -> np.ndarray:
        """Vectorized evaluation at an ``(n, 6)`` array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        exps, coefs = self.arrays()
        if not len(coefs):
            return np.zeros(len(pts))
        dmax = int(exps.max())
        powers = np.ones((dmax + 1,) + pts.shape)
        for d in range(1, dmax + 1):
            powers[d] = powers[d - 1] * pts
        cols = np.arange(NVARS)
        mono = np.ones((len(pts), len(coefs)))
        for k in cols:
            mono *= powers[exps[:, k], :, k].T
        return mono @ coefs

    # export -------------------------------------------------------------
    def to_csv(self) -> str:
        lines = [
            ",".join(str(d) for d in e) + f",{c:.17g}" for e, c in sorted(self._terms.items())
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_csv(cls, text: str) -> "MultiPoly":
        terms = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("du"):
                continue
            parts = line.split(",")
            if len(parts) != NVARS + 1:
                raise ValueError(f"bad polynomial CSV line: {line!r}")
            terms[tuple(int(p) for p in parts[:NVARS])] = float(parts[NVARS])
        return cls(terms, prune=0.0)

    def to_text(self, digits: int = 8) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for e, c in sorted(self._terms.items(), reverse=True):
            mono = "*".join(
                VARIABLES[k] if e[k] == 1 else f"{VARIABLES[k]}^{e[k]}"
                for k in range(NVARS)
                if e[k]
            )
            coef = f"{abs(c):.{digits}f}".rstrip("0").rstrip(".")
            body = f"{coef}*{mono}" if mono else coef
            pieces.append(("- " if c < 0 else "+ ") + body)
        text = " ".join(pieces)
        return text[2:] if text.startswith("+ ") else "-" + text[1:]


def poly_det(matrix: Sequence[Sequence[MultiPoly]]) -> MultiPoly:
    """Determinant of a square matrix of polynomials by memoized cofactor expansion."""
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise ValueError("matrix must be square")
    if n == 0:
        return MultiPoly.constant(1.0)
    memo: Dict[Tuple[int, frozenset], MultiPoly] = {}

    def rec(row: int, cols: Tuple[int, ...]) -> MultiPoly:
        if row == n:
            return MultiPoly.constant(1.0)
        key = (row, cols)
        if key in memo:
            return memo[key]
        acc = MultiPoly()
        for pos, col in enumerate(cols):
            entry = matrix[row][col]
            if entry.is_zero():
                continue
            rest = cols[:pos] + cols[pos + 1:]
            sub = rec(row + 1, rest)
            term = entry * sub
            acc = acc - term if pos % 2 else acc + term
        memo[key] = acc
        return acc

    return rec(0, tuple(range(n)))


def monomial(exponent: Iterable[int], coefficient: float = 1.0) -> MultiPoly:
    return MultiPoly({tuple(exponent): coefficient})
