"""Stationarity equations with the constraint multipliers solved in closed form.

For ``F`` linear in one pose block the constraint ``F = 0`` fixes ``lam2``
(and, when orientation is eliminated, ``lam1`` up to a branch sign) as an
explicit function of the kept block. Newton on these smaller systems has
wide basins even for roots close to the singular locus of the variety,
where ``lam2`` is large and extremely sensitive. The explicit forms break
down where ``F`` does not depend on the eliminated block; the full reduced
system covers those roots.

Unknowns
    position eliminated:    ``(u, v, w, lam1)`` or ``(u, v, w)``
    orientation eliminated: ``(px, py, pz)`` with a fixed branch ``+-1``
"""
from __future__ import annotations

import numpy as np

from ._kernel_py import ARMIJO, MAX_HALVINGS, _PolyDerivatives

FD_STEP = 1e-7


class ExplicitSystem:
    def __init__(self, exps, coefs, sbar, rbar, g, euclidean, elim_position):
        self.deriv = _PolyDerivatives(exps, coefs)
        self.sbar, self.rbar = float(sbar), float(rbar)
        self.g = np.asarray(g, dtype=float)
        self.euclidean = bool(euclidean)
        self.elim_position = bool(elim_position)
        self.m = 4 if (self.euclidean and self.elim_position) else 3

    def complete(self, Z, branch):
        """Full pose and multipliers ``(X, lam1, lam2)`` for explicit unknowns ``Z``."""
        n = len(Z)
        gi, gp = self.g[:3], self.g[3:]
        rb, sb = self.rbar, self.sbar
        X = np.zeros((n, 6))
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.elim_position:
                X[:, :3] = Z[:, :3]
                X[:, 3:] = gp - rb * (Z[:, :3] - gi)
                F0, dF, _ = self.deriv(X)
                a = dF[:, 3:]
                # F is linear in position, so F(p0 - t a) = F0 - t |a|^2
                lam2 = 2.0 * F0 / (a * a).sum(1)
                X[:, 3:] -= 0.5 * lam2[:, None] * a
                lam1 = Z[:, 3] if self.euclidean else np.zeros(n)
            else:
                X[:, 3:] = Z
                _, dF, _ = self.deriv(X)
                beta = dF[:, :3]
                q0 = sb * gi - rb * (Z - gp)
                lam2 = 2.0 * (beta * q0).sum(1) / (beta * beta).sum(1)
                q = q0 - 0.5 * lam2[:, None] * beta
                if self.euclidean:
                    qn = np.linalg.norm(q, axis=1)
                    X[:, :3] = branch[:, None] * q / qn[:, None]
                    lam1 = branch * qn - sb
                else:
                    X[:, :3] = q / sb
                    lam1 = np.zeros(n)
        return X, lam1, lam2

    def residual(self, Z, branch):
        X, lam1, lam2 = self.complete(Z, branch)
        _, dF, _ = self.deriv(X)
        dx = X - self.g
        if self.elim_position:
            r = 2.0 * (self.sbar * dx[:, :3] + self.rbar * dx[:, 3:]) + lam2[:, None] * dF[:, :3]
            if self.euclidean:
                r = r + 2.0 * lam1[:, None] * X[:, :3]
                r = np.column_stack([r, (X[:, :3] ** 2).sum(1) - 1.0])
        else:
            r = 2.0 * (self.rbar * dx[:, :3] + dx[:, 3:]) + lam2[:, None] * dF[:, 3:]
        return r

    def to_reduced(self, Z, branch):
        """Reduced unknowns of the full Lagrange system."""
        X, lam1, lam2 = self.complete(Z, branch)
        kept = X[:, :3] if self.elim_position else X[:, 3:]
        if self.euclidean:
            return np.column_stack([kept, lam1, lam2])
        return np.column_stack([kept, lam2])


def explicit_newton_batch(z0, branch, exps, coefs, sbar, rbar, g, euclidean, elim_position,
                          max_iter=60, tol=1e-12):
    """Damped Newton with a forward-difference Jacobian on the explicit system.

    Returns ``(reduced, residual)``; rows that never became finite carry an
    infinite residual.
    """
    sys = ExplicitSystem(exps, coefs, sbar, rbar, g, euclidean, elim_position)
    Z = np.array(z0, dtype=float, copy=True)
    branch = np.asarray(branch, dtype=float)
    n, m = Z.shape
    resid = np.full(n, np.inf)
    active = np.ones(n, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if not len(idx):
            break
        z, br = Z[idx], branch[idx]
        r = sys.residual(z, br)
        finite = np.all(np.isfinite(r), axis=1)
        rn = np.where(finite, np.abs(r).max(1) if r.size else 0.0, np.inf)
        resid[idx] = rn
        stop = ~finite | (rn <= tol)
        active[idx[stop]] = False
        keep = ~stop
        idx, z, br, r = idx[keep], z[keep], br[keep], r[keep]
        if not len(idx):
            break
        h = FD_STEP * (1.0 + np.abs(z))
        J = np.empty((len(idx), m, m))
        for k in range(m):
            zk = z.copy()
            zk[:, k] += h[:, k]
            J[:, :, k] = (sys.residual(zk, br) - r) / h[:, k][:, None]
        ok = np.all(np.isfinite(J), axis=(1, 2))
        ok[ok] &= np.abs(np.linalg.det(J[ok])) > 0
        active[idx[~ok]] = False
        idx, z, br, r, J = idx[ok], z[ok], br[ok], r[ok], J[ok]
        if not len(idx):
            break
        step = np.linalg.solve(J, -r[..., None])[..., 0]
        phi0 = 0.5 * (r * r).sum(1)
        t = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        for _ in range(MAX_HALVINGS):
            pend = np.flatnonzero(~accepted)
            if not len(pend):
                break
            trial = z[pend] + t[pend, None] * step[pend]
            rt = sys.residual(trial, br[pend])
            phi = 0.5 * (rt * rt).sum(1)
            good = np.isfinite(phi) & (phi <= (1.0 - 2.0 * ARMIJO * t[pend]) * phi0[pend])
            Z[idx[pend[good]]] = trial[good]
            accepted[pend[good]] = True
            t[pend[~good]] *= 0.5
        active[idx[~accepted]] = False
    Y = sys.to_reduced(Z, branch)
    return Y, resid
