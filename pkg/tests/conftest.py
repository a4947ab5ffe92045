import math

import numpy as np
import pytest

from qhjspin import ConstantPotential, LinearPotential, PhysicalSetup, make_action, solve_spinor_pair

K3 = math.sqrt(3.0)
_CRITERIA = {}


def record_criterion(number, title, ok, detail=""):
    _CRITERIA[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}  {detail}")


@pytest.fixture(scope="session")
def natural():
    return PhysicalSetup(energy=2.0)


@pytest.fixture(scope="session")
def free_pair(natural):
    """theta1 = sin(sqrt3 x), theta2 = cos(sqrt3 x) for V = 0, E = 2."""
    return solve_spinor_pair(natural, ConstantPotential(0.0), (-5.0, 5.0), (0.0, -1.0 / K3), (1.0, 0.0), x0=0.0)


@pytest.fixture(scope="session")
def free_s0(free_pair):
    return make_action(free_pair, "S0")


@pytest.fixture(scope="session")
def linear_pot():
    return LinearPotential(0.1)


@pytest.fixture(scope="session")
def linear_pair(natural, linear_pot):
    return solve_spinor_pair(natural, linear_pot, (-10.0, 9.5), (1.0, 0.0), (0.0, 1.0), x0=0.0)


@pytest.fixture(scope="session")
def linear_wide_pair(natural, linear_pot):
    """Covers both quantum turning points and the classical one at x = 10."""
    return solve_spinor_pair(natural, linear_pot, (-10.0, 12.0), (1.0, 0.0), (0.0, 1.0), x0=0.0)


@pytest.fixture(scope="session")
def linear_grid():
    return np.linspace(-10.0, 9.5, 200)
