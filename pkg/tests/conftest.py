import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mixdim.mesh import SegmentGeom, build_box_mesh  # noqa: E402

BOX = ((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
UNIT = ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


def kuhn_h(n, edge=2.0):
    """``h_target`` that yields ``n`` cells per axis on a cube of the given edge."""
    return edge / n * np.sqrt(3.0)


@pytest.fixture(scope="session")
def cube4():
    """Edge-2 cube with 4 cells per axis."""
    return build_box_mesh(BOX, kuhn_h(4))


@pytest.fixture(scope="session")
def two_segments():
    """Two segments sharing an endpoint, so a junction row is present."""
    return [
        SegmentGeom((0.13, 0.07, -0.8), (0.13, 0.07, 0.7), 1e-2, 1e2),
        SegmentGeom((0.13, 0.07, 0.7), (0.61, -0.42, 0.25), 1e-2, 1e2),
    ]


@pytest.fixture(scope="session")
def small_system(cube4, two_segments):
    from mixdim.assembly import assemble_system

    return assemble_system(cube4, two_segments, dirichlet={"z-": 0.0, "z+": 1.0})


@pytest.fixture(scope="session")
def small_op(small_system):
    from mixdim.assembly import build_blocks
    from mixdim.solver import ReducedOperator

    return ReducedOperator(build_blocks(small_system))


# one PASS/FAIL line per acceptance criterion, filled in by test_acceptance.py
CRITERIA: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])
