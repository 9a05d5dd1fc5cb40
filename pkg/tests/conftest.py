import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SKEW_A = np.array([[2.0, -2.0], [1.0, 1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def skew():
    return SKEW_A.copy()


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
