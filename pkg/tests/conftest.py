import math

import numpy as np
import pytest

from sirphase.model import ModelParams

# lines printed by the acceptance suite in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def baseline():
    return ModelParams()


@pytest.fixture
def unforced():
    """Constant contact rate, no vaccination."""
    return ModelParams().with_values(epsilon=0.0, v0=0.0, alpha=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SEVEN_FIFTHS_PI = 7 * math.pi / 5
