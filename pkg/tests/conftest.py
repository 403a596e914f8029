import functools

import pytest

from psminlab import radial_gns as rg


@functools.lru_cache(maxsize=None)
def ground_state(dim: int) -> rg.RadialProfile:
    return rg.solve_ground_state(dim)


@pytest.fixture(scope="session")
def profile():
    """Cached ground-state solver shared by every test module."""
    return ground_state


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
