import numpy as np
import pytest
from hypothesis import settings

from polydbar.domain import build_disc_grid, load_chart, tensor_grid

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def disc():
    return load_chart("disc")


@pytest.fixture(scope="session")
def cardioid():
    return load_chart("cardioid")


@pytest.fixture(scope="session")
def grid2():
    """Small two-factor disc grid for fast operator tests."""
    return tensor_grid(2, build_disc_grid(12, 24))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
