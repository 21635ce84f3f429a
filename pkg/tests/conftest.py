import numpy as np
import pytest

from pyrodiff import Grid, builtin_model, constant_field, cosine_bump, simulate


@pytest.fixture(scope="session")
def combustion_traj():
    """Small single-species combustion run shared across test modules.

    Fuel bump burning into an initially empty product field; long enough
    for the diagnostics that need unit cylinders (T >= 4), small enough
    to stay cheap.
    """
    spec = builtin_model("combustion-exp(1)", eta=1.0, kappa=2.0, s=1.0)
    grid = Grid(1, 20.0, 128)
    u0 = np.stack([cosine_bump(grid, height=1.0, sharpness=4)])
    v0 = np.stack([constant_field(grid, 0.0)])
    return simulate(spec, grid, u0, v0, T=4.0, dt=0.01, stride=2)
