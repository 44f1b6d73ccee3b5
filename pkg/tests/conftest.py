import numpy as np
import pytest

from bregcyclic import FunctionSpec, build


@pytest.fixture
def sq1():
    return build(FunctionSpec("squared_norm", 1))


@pytest.fixture
def sq2():
    return build(FunctionSpec("squared_norm", 2))


@pytest.fixture
def quad():
    return build(FunctionSpec("weighted_quadratic", 2, {"Q": [[1.0, 0.0], [0.0, 4.0]]}))


@pytest.fixture
def entropy():
    return build(FunctionSpec("negative_entropy", 2, {"lower": 1e-6, "upper": 1e3}))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
