import math

import numpy as np
import pytest
from hypothesis import settings

from robust_harvest import (
    GrowthSpec,
    ObjectiveSpec,
    PRESETS,
    PiecewiseLinear,
    QuadratureGrid,
    SolveGrid,
    density_weights,
    solve,
)

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

SUSTAIN = PiecewiseLinear.capped_linear(1.5, 10.0)


def logistic_oracle(x, r, K, t):
    """Closed-form logistic weight written out independently of the package."""
    return K / (1.0 + (K / x - 1.0) * math.exp(-r * t))


@pytest.fixture
def uniform150():
    return density_weights("uniform", QuadratureGrid(150))


@pytest.fixture
def growth2021():
    return PRESETS["2021"]


@pytest.fixture
def growth2022():
    return PRESETS["2022"]


@pytest.fixture
def degenerate100():
    # K_lo == K_hi and x == K makes the weight constant at 100 g for all t
    return GrowthSpec.constant_rate(x=100.0, r=0.03, K_lo=100.0, K_hi=100.0)


@pytest.fixture(scope="session")
def small_field_2021():
    """Coarse but CFL-compliant robust field used by several policy tests."""
    objective = ObjectiveSpec(terminal=SUSTAIN)
    growth = PRESETS["2021"]
    grid = SolveGrid.from_cfl(objective, growth, J=50)
    return solve(objective, growth, density_weights(), grid)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
