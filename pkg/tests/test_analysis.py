import numpy as np
import pytest

from pyrodiff import (
    Grid,
    ParabolicCylinder,
    SpaceTimeField,
    cylinder_average,
    cylinder_scan,
    exp_moment,
    jn_tail,
    moment_report,
    pack_cylinders,
    pbmo_seminorm,
    random_smooth_field,
    standard_family,
    subexp_moment,
    sup_timeline,
    unit_cylinders,
)
from pyrodiff import _accel
from pyrodiff.analysis import _block, _flat


def _random_stf(grid, n_frames, seed, dt=0.25):
    rng = np.random.default_rng(seed)
    base = np.stack([
        random_smooth_field(grid, rng, amplitude=2.0, lo=-1.0)
        for _ in range(n_frames)
    ])
    return SpaceTimeField(grid, 0.0, dt, base)


# ---------------------------------------------------------------------------
# cylinders and families
# ---------------------------------------------------------------------------


def test_cylinder_geometry():
    q = ParabolicCylinder(t0=4.0, x0=(1.0,), R=2.0, s=0.5)
    assert q.depth == pytest.approx(2.0)  # R^(2s) with 2s = 1
    assert (q.t_lo, q.t_hi) == (2.0, 6.0)
    classical = ParabolicCylinder(t0=4.0, x0=(1.0,), R=2.0)
    assert classical.depth == 4.0
    with pytest.raises(ValueError):
        ParabolicCylinder(t0=1.0, x0=(0.0,), R=0.0)
    with pytest.raises(ValueError):
        ParabolicCylinder(t0=1.0, x0=(0.0,), R=1.0, s=1.5)


def test_standard_family_radii_and_windows():
    grid = Grid(1, 20.0, 128)
    fam = standard_family(grid, T=9.0)
    radii = sorted({q.R for q in fam})
    assert radii[0] == pytest.approx(4 * grid.dx)
    for lo, hi in zip(radii, radii[1:]):
        assert hi == pytest.approx(2 * lo)  # dyadic chain
    assert max(radii) <= min(grid.L / 4, np.sqrt(9.0)) + 1e-12
    for q in fam:
        assert q.t_lo >= -1e-12
        assert q.t_hi <= 9.0 + 1e-12


def test_standard_family_fractional_headroom():
    grid = Grid(1, 20.0, 128)
    fam = standard_family(grid, T=9.0, s=0.5)
    assert all(q.s == 0.5 for q in fam)
    assert max(q.R for q in fam) <= 9.0 / 2 + 1e-12


def test_standard_family_errors():
    grid = Grid(1, 20.0, 128)
    with pytest.raises(ValueError):
        standard_family(grid, T=100.0, r_max=0.1)  # below the 4 dx anchor
    with pytest.raises(ValueError):
        standard_family(grid, T=0.1)  # no radius fits the horizon


def test_unit_cylinders():
    grid = Grid(1, 20.0, 128)
    fam = unit_cylinders(grid, T=10.0, count=7)
    assert len(fam) == 7
    assert all(q.R == 1.0 for q in fam)
    assert all(q.t0 > 1.0 for q in fam)
    assert all(q.t_hi <= 10.0 + 1e-12 for q in fam)
    with pytest.raises(ValueError):
        unit_cylinders(grid, T=2.5)
    with pytest.raises(ValueError):
        unit_cylinders(Grid(1, 3.0, 16), T=10.0)


# ---------------------------------------------------------------------------
# averages and the oscillation seminorm
# ---------------------------------------------------------------------------


def test_constant_field_statistics():
    grid = Grid(1, 20.0, 64)
    stf = SpaceTimeField(grid, 0.0, 0.5, np.full((21,) + grid.shape, 3.25))
    fam = standard_family(grid, T=10.0)
    assert cylinder_average(stf, fam[0]) == 3.25
    assert pbmo_seminorm(stf, fam) == 0.0


def test_two_level_field_oscillation_exact():
    # +-1 split evenly across the spatial window: mean 0, deviation 1
    grid = Grid(1, 16.0, 16)
    values = np.where(grid.x < 8.0, 1.0, -1.0)
    frames = np.tile(values, (10, 1))
    stf = SpaceTimeField(grid, 0.0, 1.0, frames)
    q = ParabolicCylinder(t0=4.5, x0=(7.5,), R=2.1)
    scan = cylinder_scan(stf, (q,))
    assert scan.means[0] == 0.0
    assert scan.mads[0] == 1.0
    assert scan.seminorm == 1.0
    assert scan.worst is q


def test_seminorm_invariances():
    grid = Grid(1, 20.0, 64)
    stf = _random_stf(grid, 41, seed=9)
    fam = standard_family(grid, T=10.0)
    base = pbmo_seminorm(stf, fam)
    shifted = SpaceTimeField(grid, 0.0, stf.dt, stf.frames + 17.0)
    scaled = SpaceTimeField(grid, 0.0, stf.dt, 3.0 * stf.frames)
    assert pbmo_seminorm(shifted, fam) == pytest.approx(base, rel=1e-12)
    assert pbmo_seminorm(scaled, fam) == pytest.approx(3.0 * base, rel=1e-12)
    assert base <= 2.0 * stf.sup() + 1e-12
    # a larger family can only reveal more oscillation
    assert pbmo_seminorm(stf, fam + fam[:3]) == pytest.approx(base)


def test_scan_matches_direct_blocks():
    grid = Grid(2, 12.0, 32)
    # smallest radius is 4 dx = 1.5, so the family needs T >= 4.5
    stf = _random_stf(grid, 25, seed=12)
    fam = standard_family(grid, T=6.0, n_centers_per_dim=2, n_times=2)
    scan = cylinder_scan(stf, fam)
    for q, mean, mad in zip(fam, scan.means, scan.mads):
        block = _block(stf, q)
        assert mean == pytest.approx(block.mean(), rel=1e-13)
        assert mad == pytest.approx(np.abs(block - block.mean()).mean(), rel=1e-13)


def test_accel_paths_agree():
    grid = Grid(1, 20.0, 128)
    stf = _random_stf(grid, 33, seed=21)
    fam = standard_family(grid, T=8.0)
    packed = pack_cylinders(stf, fam)
    flat = _flat(stf)
    means, mads = _accel.cylinder_stats(flat, *packed)
    means_np = np.empty(len(fam))
    mads_np = np.empty(len(fam))
    _accel._cyl_stats_numpy(flat, *packed, means_np, mads_np)
    assert np.allclose(means, means_np, rtol=1e-12, atol=1e-14)
    assert np.allclose(mads, mads_np, rtol=1e-12, atol=1e-14)
    only_means = _accel.cylinder_means(flat, *packed)
    assert np.allclose(only_means, means_np, rtol=1e-12, atol=1e-14)


def test_pack_cylinders_errors():
    grid = Grid(1, 16.0, 16)
    stf = SpaceTimeField(grid, 0.0, 1.0, np.zeros((5,) + grid.shape))
    beyond = ParabolicCylinder(t0=40.0, x0=(8.0,), R=1.0)
    with pytest.raises(ValueError):
        pack_cylinders(stf, (beyond,))
    off_lattice = ParabolicCylinder(t0=2.0, x0=(0.5,), R=0.3)
    with pytest.raises(ValueError):
        pack_cylinders(stf, (off_lattice,))


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------


def test_exp_moment_constants():
    grid = Grid(1, 20.0, 64)
    q = ParabolicCylinder(t0=2.0, x0=(10.0,), R=1.0)
    zero = SpaceTimeField(grid, 0.0, 0.25, np.zeros((17,) + grid.shape))
    assert exp_moment((zero,), (1.0,), q) == 1.0
    const = SpaceTimeField(grid, 0.0, 0.25, np.full((17,) + grid.shape, 0.7))
    assert exp_moment((const,), (2.0,), q) == pytest.approx(np.exp(1.4), rel=1e-12)
    # two fields add in the exponent
    assert exp_moment((const, const), (1.0, 1.0), q) == pytest.approx(
        np.exp(1.4), rel=1e-12
    )


def test_exp_moment_validation():
    grid = Grid(1, 20.0, 64)
    const = SpaceTimeField(grid, 0.0, 0.25, np.ones((17,) + grid.shape))
    q = ParabolicCylinder(t0=2.0, x0=(10.0,), R=1.0)
    with pytest.raises(ValueError):
        exp_moment((const,), (-1.0,), q)
    with pytest.raises(ValueError):
        exp_moment((const,), (1.0, 2.0), q)
    with pytest.raises(ValueError):
        exp_moment((const,), (1.0,), ParabolicCylinder(2.0, (10.0,), 2.0))


def test_subexp_moment():
    grid = Grid(1, 20.0, 64)
    q = ParabolicCylinder(t0=2.0, x0=(10.0,), R=1.0)
    const = SpaceTimeField(grid, 0.0, 0.25, np.full((17,) + grid.shape, 0.49))
    got = subexp_moment(const, r=2.0, rho=0.5, cyl=q)
    assert got == pytest.approx(np.exp(2.0 * 0.7), rel=1e-12)
    # rho = 1 degenerates to the exponential moment
    assert subexp_moment(const, 1.5, 1.0, q) == pytest.approx(
        exp_moment((const,), (1.5,), q), rel=1e-14
    )
    with pytest.raises(ValueError):
        subexp_moment(const, 0.0, 0.5, q)
    with pytest.raises(ValueError):
        subexp_moment(const, 1.0, 1.5, q)
    neg = SpaceTimeField(grid, 0.0, 0.25, np.full((17,) + grid.shape, -0.1))
    with pytest.raises(ValueError):
        subexp_moment(neg, 1.0, 0.5, q)


def test_moment_report():
    grid = Grid(1, 20.0, 64)
    stf = SpaceTimeField(
        grid, 0.0, 0.25,
        np.abs(_random_stf(grid, 41, seed=30).frames),
    )
    cyls = unit_cylinders(grid, T=10.0, count=6)
    rep = moment_report(V_fields=(stf,), zbar=(1.0,), cylinders=cyls)
    assert rep.passed
    assert rep.min_value >= 1.0  # exp of a nonnegative field
    assert rep.spread >= 1.0
    assert len(rep.values) == 6
    sub = moment_report(v=stf, r=1.0, rho=0.5, cylinders=cyls)
    assert sub.passed and "rho" in sub.description
    with pytest.raises(ValueError):
        moment_report(V_fields=(stf,), zbar=(1.0,), cylinders=())


# ---------------------------------------------------------------------------
# level-set tails
# ---------------------------------------------------------------------------


def test_jn_tail_constant_field_sentinel():
    grid = Grid(1, 20.0, 64)
    const = SpaceTimeField(grid, 0.0, 0.25, np.ones((17,) + grid.shape))
    q = ParabolicCylinder(t0=2.0, x0=(10.0,), R=1.0)
    res = jn_tail(const, q)
    assert res.slope == float("-inf")
    assert res.n_fit == 0
    assert not res.decaying
    assert np.all(res.fractions == 0.0)


def test_jn_tail_decay_on_smooth_field():
    grid = Grid(1, 20.0, 128)
    stf = _random_stf(grid, 65, seed=17)
    q = ParabolicCylinder(t0=4.0, x0=(10.0,), R=3.0)
    res = jn_tail(stf, q)
    assert res.fractions.size == res.levels.size == 24
    assert np.all(np.diff(res.fractions) <= 0)
    assert np.all((res.fractions >= 0) & (res.fractions <= 1))
    assert res.decaying and res.slope < 0
    assert 0.0 <= res.r_squared <= 1.0
    assert res.deviation_scale > 0


def test_jn_tail_level_validation():
    grid = Grid(1, 20.0, 64)
    stf = _random_stf(grid, 17, seed=5)
    q = ParabolicCylinder(t0=2.0, x0=(10.0,), R=1.0)
    for bad in ([1.0, 2.0], [2.0, 1.0, 3.0], [-1.0, 1.0, 2.0]):
        with pytest.raises(ValueError):
            jn_tail(stf, q, levels=bad)


# ---------------------------------------------------------------------------
# timelines
# ---------------------------------------------------------------------------


def test_sup_timeline(combustion_traj):
    times, sups = sup_timeline(combustion_traj)
    assert times.shape == sups.shape == (combustion_traj.n_frames,)
    manual = np.abs(combustion_traj.v[0].frames).max(axis=1)
    assert np.array_equal(sups, manual)
    # iterables of fields work too, taking the pointwise max across them
    times2, sups2 = sup_timeline([combustion_traj.u[0], combustion_traj.v[0]])
    want = np.maximum(
        np.abs(combustion_traj.u[0].frames).max(axis=1), manual
    )
    assert np.array_equal(sups2, want)
    with pytest.raises(ValueError):
        sup_timeline([])
