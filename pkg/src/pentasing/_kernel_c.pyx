# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled damped Newton on the reduced Lagrange system.

Same algorithm and statuses as the numpy reference kernel, run one start
at a time without the GIL.
"""
import numpy as np

from libc.math cimport fabs, isfinite

from ._kernel_py import ARMIJO, MAX_HALVINGS, _PolyDerivatives

BACKEND = "cython"

DEF NSLOT = 43
DEF MAXK = 5
DEF MAXDEG = 8

cdef int CONVERGED = 0
cdef int MAX_ITER = 1
cdef int SINGULAR_ELIMINATION = 2
cdef int LINE_SEARCH_FAILED = 3


cdef struct Problem:
    const long long* mono
    const long long* ptr     # CSR row pointers into slot/val, slots ascending
    const long long* slot
    const double* val
    int n_mono
    int dmax
    double sbar
    double rbar
    double g[6]
    bint euclidean
    bint elim_position
    int R[3]
    int E[3]
    double wE
    double cmax
    int k
    int nz
    double pivot_tol


cdef void poly_eval(const Problem* P, const double* x, double* out, int nslot) noexcept nogil:
    """Value, gradient and (if ``nslot`` is 43) Hessian slots at ``x``."""
    cdef double powers[(MAXDEG + 1) * 6]
    cdef int d, j, m
    cdef long long s
    cdef double t
    for j in range(6):
        powers[j] = 1.0
    for d in range(1, P.dmax + 1):
        for j in range(6):
            powers[d * 6 + j] = powers[(d - 1) * 6 + j] * x[j]
    for j in range(NSLOT):
        out[j] = 0.0
    for m in range(P.n_mono):
        t = 1.0
        for j in range(6):
            t *= powers[P.mono[m * 6 + j] * 6 + j]
        if t != 0.0:
            for s in range(P.ptr[m], P.ptr[m + 1]):
                if P.slot[s] >= nslot:
                    break
                out[P.slot[s]] += t * P.val[s]


cdef inline double wdot(const Problem* P, int row, const double* dx) noexcept nogil:
    # row of W (x - g)
    if row < 3:
        return P.sbar * dx[row] + P.rbar * dx[row + 3]
    return P.rbar * dx[row - 3] + dx[row]


cdef inline double wentry(const Problem* P, int a, int b) noexcept nogil:
    if a == b:
        return P.sbar if a < 3 else 1.0
    if a - b == 3 or b - a == 3:
        return P.rbar
    return 0.0


cdef bint evaluate(const Problem* P, const double* y, double* res, double* J,
                   double* c_out, double* scale_out, bint want_jac) noexcept nogil:
    """Reduced residual (and Jacobian); False if anything is not finite."""
    cdef double X[6]
    cdef double dx[6]
    cdef double d[NSLOT]
    cdef double G[8]
    cdef double H[64]
    cdef double lam1 = y[3] if P.euclidean else 0.0
    cdef double lam2 = y[P.k - 1]
    cdef double c, xmax
    cdef int a, b, e, i, j, nz = P.nz, il2 = P.nz - 1
    cdef int Rz[MAXK]

    for a in range(6):
        X[a] = 0.0
    for a in range(3):
        X[P.R[a]] = y[a]
    poly_eval(P, X, d, 7)
    for a in range(6):
        dx[a] = X[a] - P.g[a]
    c = 2.0 * P.wE
    if P.euclidean and not P.elim_position:
        c += 2.0 * lam1
    c_out[0] = c
    if c == 0.0:
        return False
    for a in range(3):
        e = P.E[a]
        X[e] = -(2.0 * wdot(P, e, dx) + lam2 * d[1 + e]) / c
    poly_eval(P, X, d, NSLOT if want_jac else 7)
    for a in range(6):
        dx[a] = X[a] - P.g[a]

    for a in range(nz):
        G[a] = 0.0
        for b in range(nz):
            H[a * 8 + b] = 0.0
    for a in range(6):
        G[a] = 2.0 * wdot(P, a, dx) + lam2 * d[1 + a]
        for b in range(6):
            H[a * 8 + b] = 2.0 * wentry(P, a, b) + lam2 * d[7 + 6 * a + b]
    if P.euclidean:
        for a in range(3):
            G[a] += 2.0 * lam1 * X[a]
            H[a * 8 + a] += 2.0 * lam1
            H[a * 8 + 6] = 2.0 * X[a]
            H[6 * 8 + a] = 2.0 * X[a]
        G[6] = X[0] * X[0] + X[1] * X[1] + X[2] * X[2] - 1.0
    G[il2] = d[0]
    for a in range(6):
        H[a * 8 + il2] = d[1 + a]
        H[il2 * 8 + a] = d[1 + a]

    for a in range(3):
        Rz[a] = P.R[a]
    if P.euclidean:
        Rz[3] = 6
        Rz[4] = 7
    else:
        Rz[3] = 6
    for i in range(P.k):
        res[i] = G[Rz[i]]
        if not isfinite(res[i]):
            return False
    if want_jac:
        for i in range(P.k):
            for j in range(P.k):
                J[i * MAXK + j] = H[Rz[i] * 8 + Rz[j]]
                for a in range(3):
                    e = P.E[a]
                    J[i * MAXK + j] -= H[Rz[i] * 8 + e] * H[e * 8 + Rz[j]] / c
    xmax = 0.0
    for a in range(6):
        if fabs(X[a]) > xmax:
            xmax = fabs(X[a])
    scale_out[0] = 1.0 + (P.cmax if P.cmax > 1.0 else 1.0) * (1.0 + xmax) ** 3
    return True


cdef bint solve(double* A, double* b, int n) noexcept nogil:
    """Gaussian elimination with partial pivoting, in place; solution in ``b``."""
    cdef int i, j, r, p
    cdef double best, f, tmp
    for i in range(n):
        p = i
        best = fabs(A[i * MAXK + i])
        for r in range(i + 1, n):
            if fabs(A[r * MAXK + i]) > best:
                best = fabs(A[r * MAXK + i])
                p = r
        if best == 0.0 or not isfinite(best):
            return False
        if p != i:
            for j in range(n):
                tmp = A[i * MAXK + j]
                A[i * MAXK + j] = A[p * MAXK + j]
                A[p * MAXK + j] = tmp
            tmp = b[i]
            b[i] = b[p]
            b[p] = tmp
        for r in range(i + 1, n):
            f = A[r * MAXK + i] / A[i * MAXK + i]
            if f != 0.0:
                for j in range(i, n):
                    A[r * MAXK + j] -= f * A[i * MAXK + j]
                b[r] -= f * b[i]
    for i in range(n - 1, -1, -1):
        tmp = b[i]
        for j in range(i + 1, n):
            tmp -= A[i * MAXK + j] * b[j]
        b[i] = tmp / A[i * MAXK + i]
        if not isfinite(b[i]):
            return False
    return True


cdef int newton_one(const Problem* P, double* y, int max_iter, double tol,
                    double armijo, int max_halvings, double* resid, long long* iters) noexcept nogil:
    cdef double res[MAXK]
    cdef double J[MAXK * MAXK]
    cdef double step[MAXK]
    cdef double trial[MAXK]
    cdef double rt[MAXK]
    cdef double c, scale, ct, st, rnorm, phi0, phi, t
    cdef int it, i, h, k = P.k
    cdef bint ok, accepted
    for it in range(max_iter + 1):
        iters[0] = it
        ok = evaluate(P, y, res, J, &c, &scale, True)
        rnorm = 0.0
        for i in range(k):
            if fabs(res[i]) > rnorm:
                rnorm = fabs(res[i])
        rnorm /= scale
        resid[0] = rnorm if ok else 1.0 / 0.0
        if not ok or not (fabs(c) > P.pivot_tol):
            return SINGULAR_ELIMINATION
        if rnorm <= tol:
            return CONVERGED
        if it == max_iter:
            return MAX_ITER
        phi0 = 0.0
        for i in range(k):
            step[i] = -res[i]
            phi0 += 0.5 * res[i] * res[i]
        if not solve(J, step, k):
            return LINE_SEARCH_FAILED
        t = 1.0
        accepted = False
        for h in range(max_halvings):
            for i in range(k):
                trial[i] = y[i] + t * step[i]
            ok = evaluate(P, trial, rt, J, &ct, &st, False)
            if ok and fabs(ct) > P.pivot_tol:
                phi = 0.0
                for i in range(k):
                    phi += 0.5 * rt[i] * rt[i]
                if isfinite(phi) and phi <= (1.0 - 2.0 * armijo * t) * phi0:
                    for i in range(k):
                        y[i] = trial[i]
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            return LINE_SEARCH_FAILED
    return MAX_ITER


def newton_batch(y0, exps, coefs, sbar, rbar, g, euclidean, elim_position,
                 max_iter=100, tol=1e-13):
    """Run damped Newton from every row of ``y0``; see the reference kernel."""
    deriv = _PolyDerivatives(exps, coefs)
    if deriv.dmax > MAXDEG:
        raise ValueError(f"exponent {deriv.dmax} exceeds compiled limit {MAXDEG}")
    cdef long long[:, ::1] mono = np.ascontiguousarray(
        deriv.monomials if len(deriv.monomials) else np.zeros((1, 6)), dtype=np.int64)
    table = deriv.table if len(deriv.monomials) else np.zeros((1, NSLOT))
    rows, cols = np.nonzero(table)
    cdef long long[::1] ptr = np.searchsorted(rows, np.arange(len(table) + 1)).astype(np.int64)
    cdef long long[::1] slot = np.ascontiguousarray(cols, dtype=np.int64) if len(cols) else np.zeros(1, np.int64)
    cdef double[::1] val = np.ascontiguousarray(table[rows, cols], dtype=float) if len(cols) else np.zeros(1)
    cdef double[:, ::1] Y = np.array(y0, dtype=float, copy=True, order="C")
    cdef Py_ssize_t n = Y.shape[0], s
    resid_a = np.full(n, np.inf)
    status_a = np.full(n, MAX_ITER, dtype=np.int8)
    iters_a = np.zeros(n, dtype=np.int64)
    cdef double[::1] resid = resid_a
    cdef signed char[::1] status = status_a
    cdef long long[::1] iters = iters_a
    cdef Problem P
    cdef int a
    cdef double[::1] gv = np.asarray(g, dtype=float)
    coefs_arr = np.asarray(coefs, dtype=float)

    P.mono = &mono[0, 0]
    P.ptr = &ptr[0]
    P.slot = &slot[0]
    P.val = &val[0]
    P.n_mono = len(deriv.monomials)
    P.dmax = deriv.dmax
    P.sbar = float(sbar)
    P.rbar = float(rbar)
    for a in range(6):
        P.g[a] = gv[a]
    P.euclidean = bool(euclidean)
    P.elim_position = bool(elim_position)
    for a in range(3):
        P.R[a] = a if P.elim_position else a + 3
        P.E[a] = a + 3 if P.elim_position else a
    P.wE = 1.0 if P.elim_position else P.sbar
    P.cmax = float(np.max(np.abs(coefs_arr))) if coefs_arr.size else 0.0
    P.nz = 8 if P.euclidean else 7
    P.k = 5 if P.euclidean else 4
    P.pivot_tol = 1e-12 * max(1.0, 2.0 * P.wE)
    if Y.shape[1] != P.k:
        raise ValueError(f"expected {P.k} reduced unknowns, got {Y.shape[1]}")
    cdef int c_max_iter = int(max_iter)
    cdef double c_tol = float(tol)
    cdef double armijo = ARMIJO
    cdef int halvings = MAX_HALVINGS

    with nogil:
        for s in range(n):
            status[s] = newton_one(&P, &Y[s, 0], c_max_iter, c_tol, armijo, halvings,
                                   &resid[s], &iters[s])
    return np.asarray(Y), resid_a, status_a, iters_a
