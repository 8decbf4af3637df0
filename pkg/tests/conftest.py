import numpy as np
import pytest

from geoladders import BumpMetric2D, make_space

FLEET_NAMES = ("euclidean-3", "sphere-2", "hyperbolic-2", "spd-3", "so3")

# pass/fail lines collected by the acceptance suite, printed in the summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fleet():
    return {name: make_space(name) for name in FLEET_NAMES}


@pytest.fixture(scope="session")
def bump():
    return BumpMetric2D(1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
