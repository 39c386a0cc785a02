import sys
import numpy as np
import pytest
from hypothesis import settings

from snnwta.constructors import (
    build_alpha_inhibitor,
    build_logn_inhibitor,
    build_one_inhibitor,
    build_theta_level,
    build_two_inhibitor,
)

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def all_constructions(n):
    """One instance of every construction at size ``n`` (theta/alpha need n >= 4)."""
    specs = [build_one_inhibitor(n), build_two_inhibitor(n), build_logn_inhibitor(n)]
    if n >= 4:
        specs += [build_theta_level(n, 1), build_theta_level(n, 2)]
        specs += [build_alpha_inhibitor(n, a) for a in (3, 4, 5)]
    return specs


@pytest.fixture
def two4():
    return build_two_inhibitor(4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.LINES):
        terminalreporter.write_line(mod.LINES[k])
