import numpy as np
import pytest

from fracqp.model import EigenForm, ProblemInstance, validate_instance

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def e(n, i):
    v = np.zeros(n)
    v[i] = 1.0
    return v


@pytest.fixture
def trivial_inst():
    """n=2, A = -e1e1', alpha=2, B = e2e2', beta=1: every vertex has ratio 1/2."""
    return validate_instance(
        ProblemInstance(2, 2.0, 1.0, EigenForm(2, [-1.0], [e(2, 0)]), EigenForm(2, [1.0], [e(2, 1)]))
    )


@pytest.fixture
def two_piece_inst():
    """f(delta) = min(-delta, 3 - 4 delta)."""
    s = 1 / np.sqrt(2)
    A = EigenForm(2, [1.5], [[s, -s]])
    B = EigenForm(2, [0.5, 2.0], [[s, s], [s, -s]])
    return validate_instance(ProblemInstance(2, 0.0, 0.0, A, B))
