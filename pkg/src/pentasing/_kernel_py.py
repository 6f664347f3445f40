"""Pure numpy reference kernel: batched damped Newton on the reduced Lagrange system.

The full unknown vector is ``z = (u, v, w, px, py, pz, lam1, lam2)`` and the
Lagrange function is::

    L = (x - g)^T W (x - g) + lam1 (u^2 + v^2 + w^2 - 1) + lam2 F(x)

One block of three pose variables (the block in which ``F`` is linear) is
eliminated in closed form; Newton runs on the remaining reduced unknowns
``y = (x_R, [lam1], lam2)`` using the Schur complement of the Hessian.
Statuses: 0 converged, 1 iteration limit, 2 singular elimination,
3 line search failure.
"""
from __future__ import annotations

import numpy as np

CONVERGED, MAX_ITER, SINGULAR_ELIMINATION, LINE_SEARCH_FAILED = 0, 1, 2, 3
ARMIJO = 1e-4
MAX_HALVINGS = 40

BACKEND = "python"


class _PolyDerivatives:
    """Value, gradient and Hessian of a polynomial at many points via one monomial table."""

    def __init__(self, exps: np.ndarray, coefs: np.ndarray):
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, 6)
        coefs = np.asarray(coefs, dtype=float)
        outputs = []  # (exponent, coefficient, output slot)
        for e, c in zip(exps, coefs):
            outputs.append((tuple(e), c, 0))
            for a in range(6):
                if e[a] == 0:
                    continue
                ea = e.copy()
                ea[a] -= 1
                outputs.append((tuple(ea), c * e[a], 1 + a))
                for b in range(6):
                    if ea[b] == 0:
                        continue
                    eab = ea.copy()
                    eab[b] -= 1
                    outputs.append((tuple(eab), c * e[a] * ea[b], 7 + 6 * a + b))
        uniq = sorted({o[0] for o in outputs})
        index = {e: k for k, e in enumerate(uniq)}
        self.monomials = np.array(uniq, dtype=np.int64).reshape(-1, 6)
        self.table = np.zeros((len(uniq), 43))
        for e, c, slot in outputs:
            self.table[index[e], slot] += c
        self.dmax = int(self.monomials.max()) if len(uniq) else 0

    def __call__(self, X: np.ndarray):
        n = len(X)
        if not len(self.monomials):
            return np.zeros(n), np.zeros((n, 6)), np.zeros((n, 6, 6))
        powers = np.ones((self.dmax + 1, n, 6))
        for d in range(1, self.dmax + 1):
            powers[d] = powers[d - 1] * X
        mono = np.ones((n, len(self.monomials)))
        for k in range(6):
            mono *= powers[self.monomials[:, k], :, k].T
        out = mono @ self.table
        return out[:, 0], out[:, 1:7], out[:, 7:].reshape(n, 6, 6)


class ReducedSystem:
    """Residual and Jacobian of the reduced system for a batch of reduced points."""

    def __init__(self, exps, coefs, sbar, rbar, g, euclidean, elim_position):
        self.deriv = _PolyDerivatives(exps, coefs)
        self.sbar = float(sbar)
        self.rbar = float(rbar)
        self.g = np.asarray(g, dtype=float)
        self.euclidean = bool(euclidean)
        self.elim_position = bool(elim_position)
        self.E = np.array([3, 4, 5] if elim_position else [0, 1, 2])
        self.R = np.array([0, 1, 2] if elim_position else [3, 4, 5])
        self.wE = 1.0 if elim_position else self.sbar
        eye = np.eye(3)
        self.W = np.block([[self.sbar * eye, self.rbar * eye], [self.rbar * eye, eye]])
        nz = 8 if self.euclidean else 7
        self.nz = nz
        self.lam2 = nz - 1
        # reduced coordinates inside z
        self.Rz = np.concatenate([self.R, [6, 7] if self.euclidean else [6]])
        self.k = len(self.Rz)
        self.cmax = float(np.max(np.abs(coefs))) if len(coefs) else 0.0

    def split(self, Y):
        lam1 = Y[:, 3] if self.euclidean else np.zeros(len(Y))
        lam2 = Y[:, -1]
        return lam1, lam2

    def eliminate(self, Y):
        """Full pose ``x`` for reduced points; also returns the elimination pivot ``c``."""
        n = len(Y)
        lam1, lam2 = self.split(Y)
        X = np.zeros((n, 6))
        X[:, self.R] = Y[:, :3]
        _, dF, _ = self.deriv(X)
        dx = X - self.g
        G0 = 2.0 * (dx @ self.W.T)[:, self.E] + lam2[:, None] * dF[:, self.E]
        c = np.full(n, 2.0 * self.wE)
        if self.euclidean and not self.elim_position:
            c = c + 2.0 * lam1
        with np.errstate(divide="ignore", invalid="ignore"):
            X[:, self.E] = -G0 / c[:, None]
        return X, c

    def evaluate(self, Y):
        n = len(Y)
        lam1, lam2 = self.split(Y)
        X, c = self.eliminate(Y)
        F, dF, d2F = self.deriv(X)
        G = np.zeros((n, self.nz))
        G[:, :6] = 2.0 * (X - self.g) @ self.W.T + lam2[:, None] * dF
        H = np.zeros((n, self.nz, self.nz))
        H[:, :6, :6] = 2.0 * self.W + lam2[:, None, None] * d2F
        if self.euclidean:
            G[:, :3] += 2.0 * lam1[:, None] * X[:, :3]
            G[:, 6] = (X[:, :3] ** 2).sum(1) - 1.0
            idx = np.arange(3)
            H[:, idx, idx] += 2.0 * lam1[:, None]
            H[:, :3, 6] = 2.0 * X[:, :3]
            H[:, 6, :3] = 2.0 * X[:, :3]
        G[:, self.lam2] = F
        H[:, :6, self.lam2] = dF
        H[:, self.lam2, :6] = dF
        Rz, E = self.Rz, self.E
        res = G[:, Rz]
        HRR = H[:, Rz][:, :, Rz]
        HRE = H[:, Rz][:, :, E]
        HER = H[:, E][:, :, Rz]
        with np.errstate(divide="ignore", invalid="ignore"):
            J = HRR - np.einsum("nij,njk->nik", HRE, HER) / c[:, None, None]
        scale = 1.0 + max(1.0, self.cmax) * (1.0 + np.abs(X).max(1)) ** 3
        return res, J, c, scale


def newton_batch(y0, exps, coefs, sbar, rbar, g, euclidean, elim_position,
                 max_iter=100, tol=1e-13):
    """Run damped Newton from every row of ``y0``.

    Returns ``(y, residual, status, iterations)`` where ``residual`` is the
    max-norm of the reduced residual divided by the point's scale.
    """
    sys = ReducedSystem(exps, coefs, sbar, rbar, g, euclidean, elim_position)
    Y = np.array(y0, dtype=float, copy=True)
    n = len(Y)
    status = np.full(n, MAX_ITER, dtype=np.int8)
    iters = np.zeros(n, dtype=np.int64)
    resid = np.full(n, np.inf)
    active = np.ones(n, dtype=bool)
    pivot_tol = 1e-12 * max(1.0, 2.0 * sys.wE)

    for it in range(max_iter + 1):
        idx = np.flatnonzero(active)
        if not len(idx):
            break
        res, J, c, scale = sys.evaluate(Y[idx])
        rnorm = np.abs(res).max(1) / scale
        resid[idx] = rnorm
        bad = ~(np.abs(c) > pivot_tol) | ~np.all(np.isfinite(res), 1)
        done = (rnorm <= tol) & ~bad
        status[idx[done]] = CONVERGED
        status[idx[bad]] = SINGULAR_ELIMINATION
        iters[idx] = it
        keep = ~(done | bad)
        active[idx[~keep]] = False
        if it == max_iter:
            break
        idx, res, J = idx[keep], res[keep], J[keep]
        if not len(idx):
            break
        finite = np.all(np.isfinite(J), axis=(1, 2))
        step = np.zeros_like(res)
        solvable = finite & (np.abs(np.linalg.det(np.where(finite[:, None, None], J, 0.0))) > 0)
        if np.any(solvable):
            step[solvable] = np.linalg.solve(J[solvable], -res[solvable][..., None])[..., 0]
        status[idx[~solvable]] = LINE_SEARCH_FAILED
        active[idx[~solvable]] = False
        idx, res, step = idx[solvable], res[solvable], step[solvable]
        phi0 = 0.5 * (res**2).sum(1)
        t = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        for _ in range(MAX_HALVINGS):
            pending = np.flatnonzero(~accepted)
            if not len(pending):
                break
            trial = Y[idx[pending]] + t[pending, None] * step[pending]
            r_new, _, c_new, _ = sys.evaluate(trial)
            phi = 0.5 * (r_new**2).sum(1)
            ok = np.isfinite(phi) & (phi <= (1.0 - 2.0 * ARMIJO * t[pending]) * phi0[pending])
            ok &= np.abs(c_new) > pivot_tol
            Y[idx[pending[ok]]] = trial[ok]
            accepted[pending[ok]] = True
            t[pending[~ok]] *= 0.5
        # a rejected step at machine precision means we are as converged as we get
        failed = ~accepted
        status[idx[failed]] = LINE_SEARCH_FAILED
        active[idx[failed]] = False
    return Y, resid, status, iters


def reduced_residual(y, exps, coefs, sbar, rbar, g, euclidean, elim_position):
    """Reduced residual, full pose and scale at a single reduced point."""
    sys = ReducedSystem(exps, coefs, sbar, rbar, g, euclidean, elim_position)
    Y = np.atleast_2d(np.asarray(y, dtype=float))
    res, _, c, scale = sys.evaluate(Y)
    X, _ = sys.eliminate(Y)
    return res[0], X[0], float(scale[0]), float(c[0])
