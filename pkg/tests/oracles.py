"""Independent reference computations used by the tests.

Nothing here calls the solver or the closed-form pedal code; each oracle
re-derives its answer from the definition (exact arithmetic, brute-force
sampling or a general-purpose constrained optimizer).
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import sympy as sp
from scipy.optimize import minimize

U, V, W, PX, PY, PZ = sp.symbols("u v w px py pz")
SYMBOLS = (U, V, W, PX, PY, PZ)


def exact_architecture(base, platform):
    """Rows ``(r, x, y, z, r x, r y, r z)`` of legs 2..5 as exact rationals."""
    rows = []
    for j in range(1, 5):
        x, y, z = (Fraction(c) for c in base[j])
        r = Fraction(platform[j])
        rows.append([r, x, y, z, r * x, r * y, r * z])
    return rows


def exact_bracket(base, platform, cols):
    A = exact_architecture(base, platform)
    return sp.Matrix([[sp.Rational(A[i][c].numerator, A[i][c].denominator) for c in cols] for i in range(4)]).det()


def symbolic_sigma(base, platform) -> dict:
    """Coefficients of det(S) by symbolic expansion, keyed by exponent tuples."""
    top = [
        [1, U, V, W, PX, PY, PZ],
        [0, PX, PY, PZ, 0, 0, 0],
        [0, 0, 0, 0, U, V, W],
    ]
    A = exact_architecture(base, platform)
    rows = top + [[sp.Rational(a.numerator, a.denominator) for a in row] for row in A]
    det = sp.expand(sp.Matrix(rows).det(method="berkowitz"))
    poly = sp.Poly(det, *SYMBOLS)
    return {tuple(m): float(c) for m, c in poly.terms()}


def fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = k * math.pi * (3.0 - math.sqrt(5.0))
    rho = np.sqrt(1.0 - z * z)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _plane_coefficients(terms: dict, orient: np.ndarray):
    """For a position-linear polynomial, ``a(i) . p + b(i)`` at each orientation row."""
    a = np.zeros((len(orient), 3))
    b = np.zeros(len(orient))
    for e, c in terms.items():
        val = c * np.prod(orient ** np.array(e[:3]), axis=1)
        k = [j for j in range(3) if e[3 + j]]
        if k:
            a[:, k[0]] += val
        else:
            b += val
    return a, b


def grid_min_distance(terms: dict, rbar: float, sbar: float, g: np.ndarray,
                      n: int = 50_000, polish: bool = True) -> float:
    """Euclidean nearest-singularity distance by orientation sampling.

    With the orientation fixed the variety is a plane in position, and the
    metric is a shifted Euclidean norm in position, so the best position
    for each sampled orientation is a foot point in closed form. The best
    sample is then refined over the sphere with Nelder-Mead.
    """
    gi, gp = g[:3], g[3:]

    def d2(orient):
        a, b = _plane_coefficients(terms, orient)
        di = orient - gi
        c = gp - rbar * di  # unconstrained optimum of the position term
        aa = (a * a).sum(1)
        with np.errstate(divide="ignore", invalid="ignore"):
            plane = np.where(aa > 0, ((a * c).sum(1) + b) ** 2 / aa, np.inf)
        return plane + (sbar - rbar * rbar) * (di * di).sum(1)

    if terms and all(e[2] >= 1 for e in terms):
        # det(S) = w * L: on the circle w = 0 every position is singular and
        # only the orientation part of the metric remains
        terms = {(e[0], e[1], e[2] - 1) + tuple(e[3:]): c for e, c in terms.items()}
        t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        ring = np.column_stack([np.cos(t), np.sin(t), np.zeros(n)])
        di = ring - gi
        circle = float(((sbar - rbar * rbar) * (di * di).sum(1)).min())
    else:
        circle = np.inf

    pts = fibonacci_sphere(n)
    vals = d2(pts)
    best = pts[np.argmin(vals)]
    if not polish:
        return float(math.sqrt(min(vals.min(), circle)))

    def f(ang):
        t, p = ang
        o = np.array([[math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)]])
        return float(d2(o)[0])

    t0 = math.acos(np.clip(best[2], -1, 1))
    p0 = math.atan2(best[1], best[0])
    res = minimize(f, [t0, p0], method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 4000})
    return float(math.sqrt(min(res.fun, vals.min(), circle)))


def constrained_nearest(fun, grad, x0s, objective, obj_grad):
    """Best local minimizer of ``objective`` on ``fun = 0`` over several SLSQP starts."""
    best = None
    for x0 in x0s:
        res = minimize(objective, x0, jac=obj_grad, method="SLSQP",
                       constraints=[{"type": "eq", "fun": fun, "jac": grad}],
                       options={"ftol": 1e-15, "maxiter": 500})
        if res.success and np.all(np.abs(fun(res.x)) < 1e-9) and (best is None or res.fun < best.fun):
            best = res
    return best
