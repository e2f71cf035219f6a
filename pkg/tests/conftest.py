import time

import pytest

from kdeffect.config import RunConfig
from kdeffect.eigensolver import solve_spectrum
from kdeffect.params import (LaserConfig, build_scaled_system, reference_electron,
                             ponderomotive_strength)

DESK_STATES = 200
FULL_STATES = 1500


@pytest.fixture(scope="session")
def laser():
    return LaserConfig()


@pytest.fixture(scope="session")
def electron(laser):
    return reference_electron(laser)


@pytest.fixture(scope="session")
def field(laser, electron):
    return ponderomotive_strength(laser, electron)


@pytest.fixture(scope="session")
def system(field, electron):
    return build_scaled_system(field, electron)


@pytest.fixture(scope="session")
def desk_basis(system):
    """200 states at h = 1e-3 (about half a minute)."""
    return solve_spectrum(system, DESK_STATES)


@pytest.fixture(scope="session")
def full_solve(system):
    """All 1500 states of the reference configuration and the solve time in seconds."""
    t0 = time.perf_counter()
    basis = solve_spectrum(system, FULL_STATES)
    return basis, time.perf_counter() - t0


@pytest.fixture(scope="session")
def full_basis(full_solve):
    return full_solve[0]


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)``; a summary line per criterion ends the run."""
    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def reference_config():
    return RunConfig()
