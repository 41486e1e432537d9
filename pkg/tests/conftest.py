import math

import pytest

from deltanls import (
    PhysicalParams,
    SolverConfig,
    build_grid,
    solve_action,
    solve_ground_state,
    solve_soliton,
)


def default_radius(params: PhysicalParams) -> float:
    return 40.0 / math.sqrt(0.5 * min(params.omega0, 1.0))


@pytest.fixture(scope="session")
def params3():
    return PhysicalParams(p=3.0, alpha=0.0)


@pytest.fixture(scope="session")
def grid_default(params3):
    return build_grid(default_radius(params3), 4096)


@pytest.fixture(scope="session")
def grid_fine(params3):
    radius = default_radius(params3)
    return build_grid(radius, 8192, 0.5e-7 * radius)


@pytest.fixture(scope="session")
def grid_small(params3):
    return build_grid(default_radius(params3), 1024)


@pytest.fixture(scope="session")
def config():
    return SolverConfig()


@pytest.fixture(scope="session")
def soliton(grid_default, config):
    return solve_soliton(1.0, 3.0, grid_default, config)


@pytest.fixture(scope="session")
def ground_state(params3, grid_default, config):
    return solve_ground_state(1.0, params3, grid_default, config)


@pytest.fixture(scope="session")
def action_2om0(params3, grid_default, config):
    return solve_action(2.0 * params3.omega0, params3, grid_default, config)


@pytest.fixture(scope="session")
def action_2om0_free(params3, grid_default, config):
    return solve_action(2.0 * params3.omega0, params3, grid_default, config,
                        freeze_charge=True)
