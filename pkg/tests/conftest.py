import pytest

from nonbayes import validate_environment


@pytest.fixture
def binary_env():
    """Symmetric two-state environment: x_H = (0.8, 0.2), x_L = (0.2, 0.8)."""
    return validate_environment([0.5, 0.5], [[0.8, 0.2], [0.2, 0.8]], ["H", "L"])


@pytest.fixture
def three_state_env():
    return validate_environment(
        [0.4, 0.3, 0.3],
        [[0.6, 0.2, 0.2], [0.2, 0.6, 0.2], [0.2, 0.2, 0.6]],
        ["a", "b", "c"],
    )



_CRITERIA_LINES = []


@pytest.fixture
def criterion_line():
    """Record a one-line pass/fail verdict; all lines are echoed in the terminal summary."""

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _CRITERIA_LINES.append((number, line))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA_LINES):
            terminalreporter.write_line(line)
