import numpy as np
import pytest

from mfdirac.grid import FourierGrid
from mfdirac.model import CouplingProfile, PolynomialPotential


@pytest.fixture(scope="session")
def rho():
    return CouplingProfile.gaussian()


@pytest.fixture(scope="session")
def quartic():
    return PolynomialPotential((0.0, 1.0))


@pytest.fixture(scope="session")
def grid64():
    return FourierGrid(64, 32.0)


@pytest.fixture(scope="session")
def grid32():
    return FourierGrid(32, 16.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
