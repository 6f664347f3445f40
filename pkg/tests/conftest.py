"""Shared designs, query pose and the acceptance summary hook."""
from __future__ import annotations

from collections import OrderedDict

import numpy as np
import pytest

from pentasing.model import Design, Pose, canonicalize

POSITION_LINEAR_BASE = [[0, 0, 0], [-0.5, 0, 0], [1, 2, 0], [-3, -1, 0], [-1, 2, 0]]
POSITION_LINEAR_PLATFORM = [0, 1, 2, 4, 6]
ORIENTATION_LINEAR_BASE = [[0, 0, 0], [1, 0, 0], [-0.5, 1.5, 0], [-3, 4, 0], [-1, 2, 0]]
ORIENTATION_LINEAR_PLATFORM = [0, 1, 3, 5, 6]
QUERY = Pose([1 / 3, 2 / 3, 2 / 3], [1, 2, 3])

# criterion id -> list of (ok, detail); filled by test_acceptance
ACCEPTANCE: "OrderedDict[str, list]" = OrderedDict()


def record(criterion: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


@pytest.fixture(scope="session")
def pl_design() -> Design:
    return Design(POSITION_LINEAR_BASE, POSITION_LINEAR_PLATFORM, "position-linear example")


@pytest.fixture(scope="session")
def ol_design() -> Design:
    return Design(ORIENTATION_LINEAR_BASE, ORIENTATION_LINEAR_PLATFORM, "orientation-linear example")


@pytest.fixture(scope="session")
def pl(pl_design):
    return canonicalize(pl_design)


@pytest.fixture(scope="session")
def ol(ol_design):
    return canonicalize(ol_design)


@pytest.fixture(scope="session")
def query() -> Pose:
    return QUERY


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit, rows in ACCEPTANCE.items():
        ok = all(r[0] for r in rows)
        bad = [d for good, d in rows if not good]
        detail = bad[0] if bad else rows[-1][1]
        more = f" (+{len(bad) - 1} more failing checks)" if len(bad) > 1 else ""
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {crit}: {len(rows) - len(bad)}/{len(rows)} checks; {detail}{more}")
