import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ellax.elliptic import lattice_from_periods

settings.register_profile("ellax", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ellax")


@pytest.fixture
def lat():
    return lattice_from_periods(0.5, 0.15 + 0.6j)


@pytest.fixture
def big_lat():
    return lattice_from_periods(1.5, 0.45 + 1.8j)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
