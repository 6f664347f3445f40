import math

import numpy as np
import pytest

from oracles import constrained_nearest, fibonacci_sphere
from pentasing.classify import synthesize_position_linear
from pentasing.errors import InfinitePedalSet, SingularQuery, UnsupportedFamily
from pentasing.model import Design, Pose, canonicalize
from pentasing.pedal import (
    fixed_orientation_pedals,
    fixed_position_pedals,
    orientation_planes,
    sphere_case,
)
from pentasing.sigma import restrict_orientation, restrict_position, sigma_polynomial

# [PAPER] orientations of the four fixed-position pedals of the position-linear example
TABLE_ORIENTATIONS = np.array([
    [0.12661404, 0.81506780, 0.56536126],
    [0.44721359, 0.89442719, 0.0],
    [-0.44721359, -0.89442719, 0.0],
    [-0.60029825, -0.34138359, -0.72325600],
])
TABLE_ANGLES = [15.75049156, 41.83152170, 138.25977700, 155.56475890]


def unit(v):
    return np.asarray(v) / np.linalg.norm(v)


def nearest_position_oracle(sig, g):
    q = restrict_orientation(sig, g.orientation)
    p0 = np.asarray(g.position)

    def fun(p):
        return q.evaluate(np.r_[g.orientation, p])

    def jac(p):
        x = np.r_[g.orientation, p]
        return np.array([q.derivative(k).evaluate(x) for k in (3, 4, 5)])

    starts = [p0 + d for d in np.vstack([np.zeros(3), 3 * fibonacci_sphere(12)])]
    return constrained_nearest(fun, jac, starts, lambda p: float((p - p0) @ (p - p0)),
                               lambda p: 2 * (p - p0))


def angle_oracle(sig, g, sign=1.0):
    """Nearest (sign=1) or farthest (sign=-1) singular orientation on the sphere."""
    q = restrict_position(sig, g.position)
    o = np.asarray(g.orientation)
    best = None
    for x0 in fibonacci_sphere(40):
        res = constrained_nearest(
            lambda i: np.array([q.evaluate(np.r_[i, g.position]), i @ i - 1.0]),
            lambda i: np.vstack([[q.derivative(k).evaluate(np.r_[i, g.position]) for k in range(3)], 2 * i]),
            [x0], lambda i: -sign * float(o @ i), lambda i: -sign * o,
        )
        if res is not None and (best is None or res.fun < best.fun):
            best = res
    return best.x


# fixed orientation ------------------------------------------------------------

def test_position_linear_fixed_orientation(pl, query):
    # [PAPER] single pedal (61/33, 38/33, 92/33), distance 1.21854359
    sols = fixed_orientation_pedals(pl, query)
    assert len(sols) == 1
    assert np.allclose(sols[0].pose.position, np.array([61, 38, 92]) / 33, atol=1e-7)
    assert sols[0].distance == pytest.approx(1.21854359, abs=1e-7)
    assert np.array_equal(sols[0].pose.orientation, query.orientation)


def test_fixed_orientation_matches_constrained_optimizer(pl, ol, query, rng):
    for d in (pl, ol):
        sig = sigma_polynomial(d)
        for g in [query] + [Pose(unit(rng.normal(size=3)), rng.normal(scale=2, size=3)) for _ in range(5)]:
            sols = fixed_orientation_pedals(d, g)
            ref = nearest_position_oracle(sig, g)
            assert np.allclose(sols[0].pose.position, ref.x, atol=1e-6)
            for s in sols:
                x = s.pose.as_vector()
                assert abs(sig.evaluate(x)) <= 1e-9 * max(sig.term_magnitude(x), sig.max_abs_coefficient())


def test_orientation_linear_fixed_orientation(ol, query):
    # [DERIVED] the two planes of the restriction and their foot points from (1, 2, 3)
    sols = fixed_orientation_pedals(ol, query)
    assert [s.branch for s in sols] == ["plane:affine", "plane:pz=0"]
    assert np.allclose(sols[0].pose.position, np.array([27, 44, 36]) / 17, atol=1e-12)
    assert sols[0].distance == pytest.approx(math.sqrt(25 / 17), abs=1e-12)
    assert np.allclose(sols[1].pose.position, [1, 2, 0], atol=1e-12)
    assert sols[1].distance == pytest.approx(3.0, abs=1e-12)


def test_query_on_variety_is_rejected(pl, query):
    foot = fixed_orientation_pedals(pl, query)[0].pose
    with pytest.raises(SingularQuery):
        fixed_orientation_pedals(pl, foot)
    with pytest.raises(SingularQuery):
        fixed_position_pedals(pl, foot)


def test_generic_design_unsupported(rng, query):
    d = canonicalize(Design(rng.normal(size=(5, 3)), rng.normal(size=5)))
    with pytest.raises(UnsupportedFamily):
        fixed_orientation_pedals(d, query)


# fixed position ---------------------------------------------------------------

def test_position_linear_fixed_position_orientations(pl, query):
    sols = fixed_position_pedals(pl, query)
    assert len(sols) == 4
    got = np.array([s.pose.orientation for s in sols])
    # [PAPER] coordinates to 1e-6
    assert np.abs(got - TABLE_ORIENTATIONS).max() < 1e-6
    # [DERIVED] angles against arccos
    o = query.orientation
    for s in sols:
        ref = math.degrees(math.acos(np.clip(o @ s.pose.orientation, -1, 1)))
        assert s.distance == pytest.approx(ref, abs=1e-6)


def test_table_angles_use_pi_equal_3_14(pl, query):
    # [PAPER] the tabulated angles equal radians * 180 / 3.14, not degrees
    sols = fixed_position_pedals(pl, query)
    for s, ref in zip(sols, TABLE_ANGLES):
        assert math.radians(s.distance) * 180 / 3.14 == pytest.approx(ref, abs=1e-5)


def test_fixed_position_extremes_match_optimizer(pl, ol, query):
    for d in (pl, ol):
        sig = sigma_polynomial(d)
        sols = fixed_position_pedals(d, query)
        assert np.allclose(sols[0].pose.orientation, angle_oracle(sig, query, 1.0), atol=1e-6)
        assert np.allclose(sols[-1].pose.orientation, angle_oracle(sig, query, -1.0), atol=1e-6)


def test_fixed_position_pedals_are_critical(pl, query):
    sig = sigma_polynomial(pl)
    o = query.orientation
    for s in fixed_position_pedals(pl, query):
        i = s.pose.orientation
        x = s.pose.as_vector()
        assert abs(i @ i - 1) < 1e-12
        assert abs(sig.evaluate(x)) < 1e-9 * max(sig.term_magnitude(x), sig.max_abs_coefficient())
        # o, i and the restricted gradient at i are linearly dependent
        grad = np.array([sig.derivative(k).evaluate(x) for k in range(3)])
        assert abs(np.linalg.det(np.vstack([o, i, grad]))) < 1e-9 * np.linalg.norm(grad)


def test_orientation_linear_fixed_position(ol, query):
    sols = fixed_position_pedals(ol, query)
    assert len(sols) == 2
    # [PAPER] nearest orientation
    assert np.allclose(sols[0].pose.orientation, [0.11346545, 0.47007115, 0.87530491], atol=1e-6)
    assert np.allclose(sols[1].pose.orientation, -sols[0].pose.orientation, atol=1e-12)
    assert sols[0].distance + sols[1].distance == pytest.approx(180.0, abs=1e-9)


def test_sphere_case_consistent_with_pedal_count(rng):
    seen = set()
    for _ in range(200):
        base = rng.normal(scale=2, size=(5, 3))
        base[:, 2] = 0
        d = canonicalize(synthesize_position_linear(base, *rng.uniform(-2, 2, size=2)))
        g = Pose(unit(rng.normal(size=3)), rng.normal(scale=4, size=3))
        case = sphere_case(d, g)
        n = len(fixed_position_pedals(d, g))
        seen.add(case)
        assert n == {"a": 4, "b": 3, "c": 2}[case]
    assert {"a", "c"} <= seen


def test_normal_query_has_infinitely_many_pedals(pl):
    pos = np.array([1.0, 2.0, 3.0])
    planes = dict(orientation_planes(sigma_polynomial(pl), pos))
    n = planes["small-circle"][:3]
    g = Pose(n / np.linalg.norm(n), pos)
    with pytest.raises(InfinitePedalSet):
        fixed_position_pedals(pl, g)


def test_non_unit_orientation_rejected(pl):
    with pytest.raises(ValueError):
        fixed_position_pedals(pl, Pose([1, 1, 1], [1, 2, 3]))
