import math

import pytest

from wfacility.core import Instance, agent

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Append one pass/fail line per acceptance criterion; echoed in the terminal summary."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def three_agents():
    """One weight-4 agent at (0,1), weight-1 agents at (-1,0) and (1,0)."""
    return Instance((agent(0, 1, 4), agent(-1, 0, 1), agent(1, 0, 1)))


SQRT2 = math.sqrt(2.0)
