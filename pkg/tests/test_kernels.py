import os
import subprocess
import sys

import numpy as np
import pytest

from pentasing import _kernel_py, kernels
from pentasing._explicit import ExplicitSystem, explicit_newton_batch
from pentasing.optimize import Mode, SolverSettings, build_lagrange, start_points

HAVE_C = "cython" in kernels.available()


@pytest.fixture(scope="module", params=[("pl", Mode.EUCLIDEAN), ("pl", Mode.EQUIFORM),
                                        ("ol", Mode.EUCLIDEAN), ("ol", Mode.EQUIFORM)],
                ids=lambda p: f"{p[0]}-{p[1].value}")
def system(request, pl, ol, query):
    d = {"pl": pl, "ol": ol}[request.param[0]]
    return build_lagrange(d, query, request.param[1])


def test_python_backend_always_available():
    assert "python" in kernels.available()
    assert kernels.get_backend("python") is _kernel_py
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_pure_python_switch():
    env = dict(os.environ, PENTASING_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from pentasing import kernels; print(kernels.DEFAULT, kernels.available())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split()[0] == "python"
    assert "cython" not in out.stdout


def test_jacobian_is_derivative_of_residual(system, rng):
    rs = _kernel_py.ReducedSystem(*system.kernel_args())
    y = start_points(system, SolverSettings(starts=64)).full[:8]
    res, J, _, _ = rs.evaluate(y)
    h = 1e-6
    for k in range(system.n_reduced):
        yp, ym = y.copy(), y.copy()
        yp[:, k] += h
        ym[:, k] -= h
        fd = (rs.evaluate(yp)[0] - rs.evaluate(ym)[0]) / (2 * h)
        assert np.allclose(J[:, :, k], fd, rtol=1e-5, atol=1e-5 * np.abs(res).max())


def test_reduced_root_solves_full_system(system):
    y0 = start_points(system, SolverSettings(starts=256)).full
    Y, resid, status, _ = _kernel_py.newton_batch(y0, *system.kernel_args())
    y = Y[status == _kernel_py.CONVERGED][0]
    x, _ = system.recover(y)
    lam1 = y[3] if system.euclidean else 0.0
    grad = system.gradient(x, lam1, y[-1])
    assert np.abs(grad).max() < 1e-9 * (1 + np.abs(x).max()) ** 3 * max(1, system.sigma.max_abs_coefficient())


@pytest.mark.skipif(not HAVE_C, reason="compiled kernel not built")
def test_backends_agree(system):
    y0 = start_points(system, SolverSettings(starts=1024)).full
    args = system.kernel_args()
    Yp, rp, sp_, ip = _kernel_py.newton_batch(y0, *args)
    Yc, rc, sc, ic = kernels.get_backend("cython").newton_batch(y0, *args)
    both = (sp_ == 0) & (sc == 0)
    assert both.sum() > 0.5 * (sp_ == 0).sum()
    assert np.mean(sp_ == sc) > 0.99
    assert np.abs(Yp[both] - Yc[both]).max() < 1e-8


@pytest.mark.skipif(not HAVE_C, reason="compiled kernel not built")
def test_compiled_kernel_rejects_bad_shape(system):
    with pytest.raises(ValueError):
        kernels.get_backend("cython").newton_batch(np.zeros((2, 9)), *system.kernel_args())


def test_explicit_roots_are_reduced_roots(system):
    st = start_points(system, SolverSettings(starts=256))
    Y, r = explicit_newton_batch(st.explicit, st.branch, *system.kernel_args())
    ok = r < 1e-12
    assert ok.sum() > 0
    rs = _kernel_py.ReducedSystem(*system.kernel_args())
    res, _, _, scale = rs.evaluate(Y[ok])
    assert (np.abs(res).max(1) / scale).max() < 1e-9


def test_explicit_completion_satisfies_constraint(system, rng):
    ex = ExplicitSystem(*system.kernel_args())
    z = rng.normal(size=(20, ex.m))
    X, lam1, lam2 = ex.complete(z, np.ones(20))
    F = system.sigma.evaluate_many(X)
    mag = np.array([system.sigma.term_magnitude(x) for x in X])
    assert np.all(np.abs(F) <= 1e-10 * mag)
    if system.euclidean and system.eliminated == "orientation":
        assert np.allclose((X[:, :3] ** 2).sum(1), 1.0)
