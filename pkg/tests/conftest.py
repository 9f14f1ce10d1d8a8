import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from polysmooth.complex import analyze  # noqa: E402
from polysmooth.fixtures import doubled_cube, doubled_triangle_circle, flat_torus, hyperbolic_edge  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cube():
    return doubled_cube()


@pytest.fixture(scope="session")
def cube_analysis(cube):
    return analyze(cube)


@pytest.fixture(scope="session")
def torus():
    return flat_torus()


@pytest.fixture(scope="session")
def triangle_circle():
    return doubled_triangle_circle()


@pytest.fixture(scope="session")
def hyperbolic():
    return hyperbolic_edge()


@pytest.fixture(scope="session")
def report_line():
    """Record one acceptance line; the lines are repeated in the terminal summary."""

    def record(line):
        print(line)
        ACCEPTANCE_LINES.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
