from __future__ import annotations

import warnings

import pytest
from hypothesis import HealthCheck, settings

warnings.filterwarnings("ignore", module="numba")

settings.register_profile("rblab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("rblab")

# criterion number -> (passed, one-line summary); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, line = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}  {line}")


@pytest.fixture(scope="session")
def model2():
    from rblab.germ import default_spec
    return default_spec(2)


@pytest.fixture(scope="session")
def model3():
    from rblab.germ import default_spec
    return default_spec(3)


@pytest.fixture(scope="session")
def pert2():
    from rblab.germ import default_perturbed
    return default_perturbed(2)


@pytest.fixture(scope="session")
def bp_model():
    import math

    from rblab.regions import BasinParams, SectorParams
    return BasinParams(0.3, SectorParams(0.5, math.pi / 4))
