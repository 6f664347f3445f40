import numpy as np
import pytest

from oracles import grid_min_distance
from pentasing.classify import synthesize_position_linear
from pentasing.errors import BudgetExhausted, SingularQuery, UnsupportedFamily
from pentasing.model import Design, Pose, canonicalize
from pentasing.optimize import (
    Mode,
    SolverSettings,
    build_lagrange,
    constraint_polynomial,
    nearest_singular_pose,
    singularity_free_radii,
    solve_critical_points,
    start_points,
)
from pentasing.poly import MultiPoly
from pentasing.sigma import sigma_polynomial

# [PAPER] rows that are stationary points to the printed precision:
# (u, v, w, lambda1, lambda2, d)
EUCLIDEAN_ROWS = {
    0: [0.19954344, 0.75426388, 0.62551450, 0.22471412, 0.00242829, 0.37163905],
    1: [0.44721359, 0.89442721, 0.00000000, -1.18154819, 0.15475648, 1.53723662],
    4: [0.50116745, 0.86532314, 0.00686193, -1.24444052, 63.53263267, 4.98948239],
}


@pytest.fixture(scope="module")
def solved(pl, ol, query):
    out = {}
    for name, d in (("pl", pl), ("ol", ol)):
        for mode in Mode:
            sys = build_lagrange(d, query, mode)
            out[name, mode] = (sys, solve_critical_points(sys))
    return out


def columns(cp):
    row = list(cp.pose.orientation) + list(cp.multipliers) + [cp.distance]
    return np.array(row if len(cp.multipliers) == 2 else row + [cp.scale])


# system assembly --------------------------------------------------------------

def test_reduced_dimensions(pl, ol, query):
    for d, elim in ((pl, "position"), (ol, "orientation")):
        eu = build_lagrange(d, query, Mode.EUCLIDEAN)
        eq = build_lagrange(d, query, "equiform")
        assert eu.eliminated == elim and eq.eliminated == elim
        assert (eu.n_equations, eu.n_reduced) == (8, 5)
        assert (eq.n_equations, eq.n_reduced) == (7, 4)
    assert build_lagrange(pl, query).variables == ("u", "v", "w", "lambda1", "lambda2")


def test_singular_query_rejected(pl):
    with pytest.raises(SingularQuery):
        build_lagrange(pl, Pose([1 / 3, 2 / 3, 2 / 3], np.array([61, 38, 92]) / 33))


def test_generic_design_unsupported(rng, query):
    d = canonicalize(Design(rng.normal(size=(5, 3)), rng.normal(size=5)))
    with pytest.raises(UnsupportedFamily):
        build_lagrange(d, query)


def test_euclidean_needs_unit_query(pl):
    with pytest.raises(ValueError):
        build_lagrange(pl, Pose([1, 1, 1], [1, 2, 3]))
    build_lagrange(pl, Pose([1, 1, 1], [1, 2, 3]), Mode.EQUIFORM)


def test_constraint_sign_rule():
    p = MultiPoly({(0, 0, 1, 0, 0, 0): -2.0, (1, 0, 0, 0, 0, 0): 1.0, (1, 1, 1, 0, 0, 0): 5.0})
    # lowest degree is 1 and u is the lexicographically largest linear monomial
    assert constraint_polynomial(p).terms[(1, 0, 0, 0, 0, 0)] == 1.0
    assert constraint_polynomial(-p).terms == constraint_polynomial(p).terms
    assert constraint_polynomial(MultiPoly()).is_zero()


def test_start_points_deterministic(pl, query):
    sys = build_lagrange(pl, query)
    a = start_points(sys, SolverSettings(seed=3, starts=256))
    b = start_points(sys, SolverSettings(seed=3, starts=256))
    c = start_points(sys, SolverSettings(seed=4, starts=256))
    assert np.array_equal(a.full, b.full) and np.array_equal(a.explicit, b.explicit)
    assert not np.array_equal(a.full, c.full)
    assert len(a.explicit) == 128


# solutions ---------------------------------------------------------------------

def test_every_point_validated(solved):
    for (name, mode), (sys, pts) in solved.items():
        assert pts, (name, mode)
        sig = sys.sigma
        for cp in pts:
            x = cp.pose.as_vector()
            lam1 = cp.lambda1 or 0.0
            grad = sys.gradient(x, lam1, cp.lambda2)
            scale = 1 + max(1, sig.max_abs_coefficient()) * (1 + np.abs(x).max()) ** 3
            assert np.abs(grad).max() < 1e-9 * scale
            assert abs(sig.evaluate(x)) < 1e-8 * max(sig.term_magnitude(x), sig.max_abs_coefficient())
            if mode is Mode.EUCLIDEAN:
                assert abs(cp.scale - 1) < 1e-8
        assert [p.distance for p in pts] == sorted(p.distance for p in pts)


def test_real_root_counts(solved):
    counts = {k: len(v[1]) for k, v in solved.items()}
    assert counts == {("pl", Mode.EUCLIDEAN): 6, ("pl", Mode.EQUIFORM): 3,
                      ("ol", Mode.EUCLIDEAN): 6, ("ol", Mode.EQUIFORM): 3}


def test_accurate_euclidean_rows(solved):
    pts = solved["pl", Mode.EUCLIDEAN][1]
    for k, row in EUCLIDEAN_ROWS.items():
        assert np.abs(columns(pts[k]) - row).max() < 1e-5


def test_minimizers(solved):
    # [PAPER] minimizer distances, scale factors and positions
    eu = solved["pl", Mode.EUCLIDEAN][1][0]
    assert eu.distance == pytest.approx(0.37163905, abs=1e-5)
    assert np.allclose(eu.pose.position, [1.42386285, 1.69623807, 3.11364494], atol=1e-5)
    eq = solved["pl", Mode.EQUIFORM][1][0]
    assert (eq.distance, eq.scale) == pytest.approx((0.35854952, 1.04265095), abs=1e-7)
    assert np.allclose(eq.pose.position, [1.36501824, 1.63498176, 3.03249538], atol=1e-5)
    eu = solved["ol", Mode.EUCLIDEAN][1][0]
    assert eu.distance == pytest.approx(0.41484860, abs=1e-7)
    assert np.allclose(eu.pose.position, [1.35978906, 2.34492506, 2.57706069], atol=1e-5)
    eq = solved["ol", Mode.EQUIFORM][1][0]
    assert (eq.distance, eq.scale) == pytest.approx((0.41349741, 0.98530404), abs=1e-7)


def test_equiform_never_farther(solved):
    for name in ("pl", "ol"):
        assert solved[name, Mode.EQUIFORM][1][0].distance <= solved[name, Mode.EUCLIDEAN][1][0].distance + 1e-9


def test_minimum_agrees_with_grid_oracle(solved, query):
    sys, pts = solved["pl", Mode.EUCLIDEAN]
    ref = grid_min_distance(sys.sigma.terms, sys.metric.mean_offset, sys.metric.mean_square, query.as_vector())
    assert pts[0].distance == pytest.approx(ref, rel=1e-6)


def test_deterministic(pl, query):
    sys = build_lagrange(pl, query, Mode.EQUIFORM)
    a = solve_critical_points(sys, SolverSettings(starts=1024))
    b = solve_critical_points(sys, SolverSettings(starts=1024))
    assert [columns(p).tolist() for p in a] == [columns(p).tolist() for p in b]


def test_backends_give_same_roots(pl, query):
    from pentasing import kernels

    sys = build_lagrange(pl, query, Mode.EQUIFORM)
    results = [solve_critical_points(sys, SolverSettings(starts=1024, backend=b)) for b in kernels.available()]
    for other in results[1:]:
        assert len(other) == len(results[0])
        for p, q in zip(results[0], other):
            assert np.abs(columns(p) - columns(q)).max() < 1e-9


def test_budget_exhausted_keeps_partial(pl, query):
    sys = build_lagrange(pl, query, Mode.EQUIFORM)
    with pytest.raises(BudgetExhausted) as info:
        solve_critical_points(sys, SolverSettings(starts=512, expected=99))
    assert len(info.value.partial) == 3


def test_nearest_and_radii(pl, query):
    assert nearest_singular_pose(pl, query).distance == pytest.approx(0.37163730, abs=1e-7)
    radii = singularity_free_radii(pl, query)
    assert radii.equiform.distance <= radii.euclidean.distance


def test_far_query_against_grid_oracle(rng):
    base = rng.normal(scale=2, size=(5, 3))
    base[:, 2] = 0
    d = canonicalize(synthesize_position_linear(base, 0.7, -1.3))
    o = rng.normal(size=3)
    g = Pose(o / np.linalg.norm(o), [40.0, -55.0, 70.0])
    cp = nearest_singular_pose(d, g)
    assert np.all(np.isfinite(cp.pose.as_vector())) and cp.residual < 1e-9
    sig = build_lagrange(d, g).sigma
    ref = grid_min_distance(sig.terms, float(np.mean(d.platform)), float(np.mean(d.platform ** 2)), g.as_vector())
    assert cp.distance == pytest.approx(ref, rel=1e-4)
