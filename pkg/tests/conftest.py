import sys

import numpy as np
import pytest

from esflow.thermo import GasModel


@pytest.fixture
def gas():
    return GasModel(gamma=1.4, R=1.0, Pr=0.72, Re=1.0, mu_ref=1.0)


@pytest.fixture
def inviscid_gas():
    return GasModel(gamma=1.4, R=1.0, Pr=0.72, Re=1.0, mu_ref=0.0)


def random_states(n, gas, seed=0, rho_range=(-2, 2), p_range=(-2, 2),
                  v_scale=2.0):
    """Random admissible conservative states with log-uniform rho, P."""
    rng = np.random.default_rng(seed)
    rho = 10.0 ** rng.uniform(*rho_range, n)
    P = 10.0 ** rng.uniform(*p_range, n)
    V = rng.normal(0.0, v_scale, (n, 3))
    U = np.empty((n, 5))
    U[:, 0] = rho
    U[:, 1:4] = rho[:, None] * V
    U[:, 4] = P / (gas.gamma - 1.0) + 0.5 * rho * np.einsum("ij,ij->i", V, V)
    return U


def pytest_terminal_summary(terminalreporter):
    """Echo the one-line-per-criterion gate results past output capture."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance gate")
        for line in lines:
            terminalreporter.write_line(line)
