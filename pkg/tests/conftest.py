import numpy as np
import pytest

from flowmon import RoutingMatrix

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """One printed pass/fail line per acceptance criterion, echoed again
    in the terminal summary so it survives output capture."""

    def _report(number, name, ok, detail):
        line = f"ACCEPTANCE {number} ({name}): {'PASS' if ok else 'FAIL'} - {detail}"
        print(line, flush=True)
        ACCEPTANCE_LINES.append(line)
        return line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def shared_link_routing():
    """Two links, three flows: flow 0 crosses both links, flows 1 and 2
    each ride one link alongside it."""
    return RoutingMatrix(np.array([[1, 1, 0], [1, 0, 1]]))


@pytest.fixture
def single_link_routing():
    return RoutingMatrix(np.array([[1]]))
