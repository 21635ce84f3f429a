import numpy as np
import pytest

from pyrodiff import (
    Grid,
    SpaceTimeField,
    apply_T,
    apply_T_direct,
    apply_T_via_J,
    check_L2_bound,
    hoelder_time_modulus,
    random_forcing,
    solve_forced,
)
from pyrodiff.operators import cylinder_average_bound


def _single_mode(grid, dt, n_steps, omega, j):
    """F(t, x) = sin(omega t) cos(j x) on a 2 pi box."""
    times = dt * np.arange(n_steps + 1)
    frames = np.sin(omega * times)[:, None] * np.cos(j * grid.x)[None, :]
    return SpaceTimeField(grid, 0.0, dt, frames), times


def _mode_response(a, omega, times):
    """int_0^t exp(-a (t - s)) sin(omega s) ds, closed form."""
    return (
        a * np.sin(omega * times)
        - omega * np.cos(omega * times)
        + omega * np.exp(-a * times)
    ) / (a * a + omega * omega)


def test_solve_forced_single_mode_oracle():
    grid = Grid(1, 2 * np.pi, 32)
    kappa, omega, j = 0.7, 1.3, 2
    dt, n_steps = 2.0**-12, 4096
    F, times = _single_mode(grid, dt, n_steps, omega, j)
    got = solve_forced(grid, F.frames, dt, kappa)
    lam = float(j * j)
    want = _mode_response(kappa * lam, omega, times)[:, None] * np.cos(j * grid.x)
    # exact for forcing linear in time per step; sin deviates by O(dt^2)
    assert np.abs(got - want).max() < 1e-7


def test_apply_T_single_mode_oracle():
    grid = Grid(1, 2 * np.pi, 32)
    kappa, omega, j = 0.7, 1.3, 2
    dt, n_steps = 2.0**-12, 4096
    F, times = _single_mode(grid, dt, n_steps, omega, j)
    got = apply_T(F, kappa).phi
    lam = float(j * j)
    want = -lam * _mode_response(kappa * lam, omega, times)[:, None] * np.cos(
        j * grid.x
    )
    assert np.abs(got.frames - want).max() < 1e-6
    assert got.t0 == 0.0 and got.dt == dt


def test_apply_T_kills_spatially_constant_forcing():
    grid = Grid(1, 10.0, 64)
    frames = 0.7 * np.ones((20,) + grid.shape)
    F = SpaceTimeField(grid, 0.0, 0.1, frames)
    res = apply_T(F, 1.0)
    assert np.abs(res.phi.frames).max() == 0.0
    # the potential route keeps the constant mode: J grows linearly
    J = solve_forced(grid, frames, 0.1, 1.0)
    assert J[-1].mean() == pytest.approx(0.7 * 1.9, rel=1e-12)


def test_apply_T_linearity():
    grid = Grid(1, 10.0, 64)
    times = 0.05 * np.arange(40)
    F = random_forcing(grid, 1, amplitude=1.0)
    G = random_forcing(grid, 2, amplitude=1.0)
    sf = SpaceTimeField(grid, 0.0, 0.05, F.sample(times))
    sg = SpaceTimeField(grid, 0.0, 0.05, G.sample(times))
    combo = SpaceTimeField(grid, 0.0, 0.05, 2.0 * sf.frames - 3.0 * sg.frames)
    lhs = apply_T(combo, 1.4).phi.frames
    rhs = 2.0 * apply_T(sf, 1.4).phi.frames - 3.0 * apply_T(sg, 1.4).phi.frames
    assert np.abs(lhs - rhs).max() < 1e-12


def test_l2_contraction():
    grid = Grid(1, 10.0, 128)
    times = 0.02 * np.arange(50)
    for seed in range(5):
        F = random_forcing(grid, seed, amplitude=1.0)
        sf = SpaceTimeField(grid, 0.0, 0.02, F.sample(times))
        for kappa, s in ((0.5, 1.0), (2.0, 0.5)):
            ratio, ok = check_L2_bound(sf, kappa, s)
            assert ok and ratio <= 1.0 + 1e-6

    zero = SpaceTimeField(grid, 0.0, 0.02, np.zeros((3,) + grid.shape))
    assert check_L2_bound(zero, 1.0) == (0.0, True)


def test_via_J_route_agrees():
    grid = Grid(1, 10.0, 64)
    dt = 0.005
    times = dt * np.arange(201)
    F = random_forcing(grid, 7, amplitude=1.0, omega_max=1.0)
    sf = SpaceTimeField(grid, 0.0, dt, F.sample(times))
    for s in (1.0, 0.5):
        a = apply_T(sf, 1.5, s)
        b = apply_T_via_J(sf, 1.5, s)
        assert np.abs(a.phi.frames - b.phi.frames).max() < 1e-4
    assert b.j is not None and b.method == "j-derivative"
    with pytest.raises(ValueError):
        apply_T_via_J(SpaceTimeField(grid, 0.0, dt, sf.frames[:2]), 1.5)


def test_direct_kernel_route_agrees():
    grid = Grid(1, 2 * np.pi, 16)
    dt = 0.01
    times = dt * np.arange(61)
    F = random_forcing(grid, 11, amplitude=1.0, modes=2, omega_max=1.0)
    sf = SpaceTimeField(grid, 0.0, dt, F.sample(times))
    a = apply_T(sf, 0.5)
    c = apply_T_direct(sf, 0.5)
    assert c.method == "direct-kernel"
    assert np.abs(a.phi.frames - c.phi.frames).max() < 5e-3


def test_solve_forced_validation():
    grid = Grid(1, 10.0, 16)
    frames = np.zeros((4,) + grid.shape)
    with pytest.raises(ValueError):
        solve_forced(grid, frames, 0.1, kappa=0.0)
    with pytest.raises(ValueError):
        solve_forced(grid, frames, 0.0, kappa=1.0)
    with pytest.raises(ValueError):
        solve_forced(grid, frames, 0.1, kappa=1.0, s=2.0)


def test_hoelder_time_modulus():
    grid = Grid(1, 10.0, 64)
    dt = 0.01
    times = dt * np.arange(101)
    F = random_forcing(grid, 3, amplitude=2.0)
    J = solve_forced(grid, F.sample(times), dt, 1.0)
    stf = SpaceTimeField(grid, 0.0, dt, J)
    m = hoelder_time_modulus(stf, 0.9, F.sup_bound)
    assert np.isfinite(m) and m > 0

    with pytest.raises(ValueError):
        hoelder_time_modulus(stf, 1.0, 1.0)
    with pytest.raises(ValueError):
        hoelder_time_modulus(stf, 0.9, 0.0)
    with pytest.raises(ValueError):
        hoelder_time_modulus(
            SpaceTimeField(grid, 0.0, dt, J[:1]), 0.9, 1.0
        )


def test_cylinder_average_bound_zero_forcing():
    grid = Grid(1, 10.0, 64)
    zero = SpaceTimeField(grid, 0.0, 0.1, np.zeros((5,) + grid.shape))
    assert cylinder_average_bound(zero, 1.0, 1.0, ()) == 0.0
