import numpy as np
import pytest

from epohedge import (MortgageSpec, OUParams, SigmoidParams, YieldCurve, fit_theta, make_grid,
                      notional_paths, simulate_paths)

RHO = 0.44


@pytest.fixture(scope="session")
def curve():
    return YieldCurve.flat(0.03)


@pytest.fixture(scope="session")
def hw(curve):
    return fit_theta(curve, 0.023, 0.006)


@pytest.fixture(scope="session")
def ou_p():
    return OUParams(2.099, -0.002, 0.015)


@pytest.fixture(scope="session")
def bullet():
    return MortgageSpec.annual()


@pytest.fixture(scope="session")
def grid(bullet):
    return make_grid(0.0, 10.0, 12, bullet.reset_dates, bullet.payment_dates)


@pytest.fixture(scope="session")
def small_paths(hw, ou_p, grid):
    return simulate_paths(hw, ou_p, RHO, grid, 4000, 11)


@pytest.fixture(scope="session")
def small_notionals(bullet, small_paths):
    return notional_paths(bullet, SigmoidParams.empirical(), small_paths)


def standard_error(x):
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / np.sqrt(x.size))


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "REPORT", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
