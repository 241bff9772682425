import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fastdiff.core import ModelParams, build_grid, validate_params
from fastdiff.kernels import assemble_kernel
from fastdiff.stationary import meanfield_state, solve_h_star

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    RESULTS = mod.RESULTS
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS, key=lambda k: int(k.split()[0])):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")


@pytest.fixture(scope="session")
def drift_07():
    """Drift, N=1, lambda=2, q=0.7 on [0, 15] with 256 cells."""
    p = validate_params(ModelParams(1, 2.0, 0.7, "drift"))
    grid = build_grid(1, 15.0, 256)
    return p, solve_h_star(p, grid)


@pytest.fixture(scope="session")
def meanfield_07():
    """Mean-field, N=1, lambda=2, q=0.7 on [0, 15] with 256 cells, with its kernels."""
    p = validate_params(ModelParams(1, 2.0, 0.7, "meanfield"))
    grid = build_grid(1, 15.0, 256)
    K = assemble_kernel(grid, 2.0)
    K1 = assemble_kernel(grid, 2.0, mode=1)
    return p, meanfield_state(p, grid), K, K1


@pytest.fixture(scope="session")
def meanfield_l4():
    """Mean-field, N=2, lambda=4, q=0.9 fixed point on the tail-rule grid with 256 cells."""
    from fastdiff.core import tail_radius

    p = validate_params(ModelParams(2, 4.0, 0.9, "meanfield"))
    grid = build_grid(2, tail_radius(p), 256)
    K = assemble_kernel(grid, 4.0)
    return p, meanfield_state(p, grid, kernel=K), K


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
