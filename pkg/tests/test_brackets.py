import itertools

import numpy as np
import pytest

from oracles import exact_bracket
from pentasing.brackets import (
    COLUMN_IDS,
    ArchColumns,
    ArchStatus,
    all_brackets,
    architecture_rank,
    architecture_verdict,
    bracket,
    column_index,
    coplanarity_witness,
)
from pentasing.model import Design, canonicalize

PLANAR = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 3, 0], [-1, 2, 0]]


def test_repeated_column_is_zero(pl):
    cols = ArchColumns.from_design(pl)
    assert bracket("r", "X", "r", "Y", cols) == 0.0


def test_position_linear_brackets_vanish(pl):
    # [PAPER] both position-quadratic brackets vanish for the position-linear example
    cols = ArchColumns.from_design(pl)
    assert bracket("r", "X", "Y", "rX", cols) == pytest.approx(0.0, abs=1e-12)
    assert bracket("r", "X", "Y", "rY", cols) == pytest.approx(0.0, abs=1e-12)


def test_brackets_match_exact_arithmetic(rng):
    for _ in range(20):
        base = rng.integers(-6, 7, size=(5, 3))
        base[0] = 0
        platform = rng.integers(-6, 7, size=5)
        platform[0] = 0
        cols = ArchColumns.from_design(Design(base, platform))
        for combo in itertools.combinations(range(7), 4):
            ref = float(exact_bracket(base.tolist(), platform.tolist(), combo))
            assert bracket(*combo, cols) == pytest.approx(ref, rel=1e-10, abs=1e-8)


def test_all_brackets_enumerates_35(pl):
    br = all_brackets(ArchColumns.from_design(pl))
    assert len(br) == 35
    assert set(itertools.chain.from_iterable(br)) == set(COLUMN_IDS)


def test_column_ids():
    assert column_index("rY") == 5 and column_index(3) == 3
    with pytest.raises(ValueError):
        column_index("q")


def test_columns_need_canonical_origin():
    with pytest.raises(ValueError):
        ArchColumns.from_design(Design(np.ones((5, 3)), [0, 1, 2, 3, 4]))


def test_rank_of_working_designs(pl, ol):
    assert architecture_rank(ArchColumns.from_design(pl)) == 4
    assert architecture_rank(ArchColumns.from_design(ol)) == 4
    assert coplanarity_witness(ArchColumns.from_design(pl)) is None
    assert coplanarity_witness(ArchColumns.from_design(ol)) is None


def test_equal_offsets_over_planar_base_rank_three():
    # r constant on legs 2..5 makes rX = X, rY = Y; a planar base also kills Z
    cols = ArchColumns.from_design(Design(PLANAR, [0, 1, 1, 1, 1]))
    assert architecture_rank(cols) == 3
    plane = coplanarity_witness(cols)
    assert plane is not None
    assert np.abs(plane @ cols.matrix).max() < 1e-9
    assert np.linalg.norm(plane) == pytest.approx(1.0)


def test_row_combination_rank_three(rng):
    # leg 5's base point and offset chosen so its row is a mix of legs 2..4
    base = np.zeros((5, 3))
    base[1:4] = rng.normal(size=(3, 3))
    r = np.array([0.0, 1.0, 1.0, 1.0, 1.0])
    wts = np.array([0.2, 0.5, 0.3])
    base[4] = wts @ base[1:4]
    cols = ArchColumns.from_design(Design(base, r))
    assert architecture_rank(cols) == 3
    assert np.abs(coplanarity_witness(cols) @ cols.matrix).max() < 1e-9


def test_rank_tolerance_must_be_positive(pl):
    with pytest.raises(ValueError):
        architecture_rank(ArchColumns.from_design(pl), tol=0)


def test_working_designs_not_singular(pl, ol):
    assert architecture_verdict(pl).status is ArchStatus.NOT_ARCH_SINGULAR
    assert architecture_verdict(ol).status is ArchStatus.NOT_ARCH_SINGULAR
    assert not architecture_verdict(pl).singular


def test_triple_coincidence():
    # m2 = m3 = m4 and M1 = M5
    base = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 3, 1], [0, 0, 0]]
    v = architecture_verdict(canonicalize(Design(base, [0, 1, 1, 1, 4])))
    assert v.status is ArchStatus.EXCEPTIONAL_TRIPLE_COINCIDENCE
    assert v.rank == 4 and v.singular


def test_quad_coincidence():
    base = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 3, 1], [-1, 2, 5]]
    v = architecture_verdict(canonicalize(Design(base, [0, 1, 1, 1, 1])))
    assert v.status is ArchStatus.EXCEPTIONAL_QUAD_COINCIDENCE
    assert v.rank == 4


def test_rank_deficiency_reported_first():
    v = architecture_verdict(canonicalize(Design(PLANAR, [0, 1, 1, 1, 1])))
    assert v.status is ArchStatus.RANK_DEFICIENT and v.rank == 3
