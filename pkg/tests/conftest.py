import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bilab.core import PointCharges, RadialProfile

settings.register_profile("bilab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("bilab")

ACCEPTANCE = {}


def record(number: int, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def bion_charge():
    return PointCharges([[0.0, 0.0, 0.0]], [4 * np.pi])


@pytest.fixture(scope="session")
def unit_ball():
    g = np.linspace(1e-3, 1.0, 1000)
    return RadialProfile(g, np.ones_like(g))


@pytest.fixture(scope="session")
def bion(bion_charge):
    from bilab.radial import solve_radial
    return solve_radial(bion_charge)
