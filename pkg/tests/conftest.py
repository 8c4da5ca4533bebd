import numpy as np
import pytest


def agm(a: float, b: float) -> float:
    for _ in range(60):
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return a


def complete_k(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter m = k^2."""
    return np.pi / (2 * agm(1.0, np.sqrt(1.0 - m)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
