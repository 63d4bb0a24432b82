import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def loop_indices(shape):
    return np.ndindex(*shape)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
