"""Parabolic-cylinder statistics: pBMO seminorms, moments, tail decay.

A cylinder Q_R(t0, x0) is the space-time set {|x - x0| < R, |t - t0| <
R^(2s)}; the time half-width follows the diffusion scaling, so classical
parabolic cylinders are the s = 1 case.  Families of cylinders are packed
once into flat index arrays and scanned by the compiled kernels in
``_accel``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import cylinder_stats
from .grids import Grid, SpaceTimeField

__all__ = [
    "ParabolicCylinder",
    "CylinderScan",
    "MomentReport",
    "JNTailResult",
    "standard_family",
    "unit_cylinders",
    "pack_cylinders",
    "cylinder_average",
    "cylinder_scan",
    "pbmo_seminorm",
    "exp_moment",
    "subexp_moment",
    "moment_report",
    "jn_tail",
    "sup_timeline",
]


@dataclass(frozen=True)
class ParabolicCylinder:
    """Q_R(t0, x0): spatial ball of radius R, time half-width R^(2s)."""

    t0: float
    x0: tuple
    R: float
    s: float = 1.0

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"cylinder radius must be > 0, got {self.R}")
        if not 0.0 < self.s <= 1.0:
            raise ValueError(f"cylinder order must lie in (0, 1], got {self.s}")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))

    @property
    def depth(self) -> float:
        """Time half-width R^(2s)."""
        return self.R ** (2.0 * self.s)

    @property
    def t_lo(self) -> float:
        return self.t0 - self.depth

    @property
    def t_hi(self) -> float:
        return self.t0 + self.depth


def standard_family(
    grid: Grid,
    T: float,
    s: float = 1.0,
    t_min: float = 0.0,
    n_centers_per_dim: int = 4,
    n_times: int = 3,
    r_min: float = None,
    r_max: float = None,
) -> tuple:
    """Deterministic cylinder family with dyadic radii anchored at 4 dx.

    Radii are 4dx * 2^k up to min(L/4, T^(1/2s)) (fractional orders get an
    extra factor 1/2 of headroom); radii whose time width cannot fit in
    [t_min, T] are dropped.  Centers sit on a sub-lattice of grid points
    and cylinders never wrap the torus.  Anchoring the chain at the bottom
    keeps the radius set stable when only T changes, which is what makes
    seminorms comparable across horizons.
    """
    if r_min is None:
        r_min = 4.0 * grid.dx
    if r_max is None:
        if s == 1.0:
            r_max = min(grid.L / 4.0, np.sqrt(T))
        else:
            r_max = min(grid.L / 4.0, T ** (1.0 / (2.0 * s)) / 2.0)
    if r_max < r_min * (1.0 - 1e-12):
        raise ValueError(
            f"no admissible cylinder radii: want [{r_min:.4g}, {r_max:.4g}]; "
            "refine the grid or lengthen the run"
        )
    radii = []
    r = r_min
    while r <= r_max * (1.0 + 1e-12):
        radii.append(r)
        r *= 2.0

    stride = max(1, grid.N // n_centers_per_dim)
    marks = grid.x[::stride]
    if grid.n == 1:
        centers = [(float(c),) for c in marks]
    else:
        centers = [(float(a), float(b)) for a in marks for b in marks]

    cyls = []
    for R in radii:
        depth = R ** (2.0 * s)
        if t_min + 2.0 * depth > T:
            continue
        tops = np.linspace(t_min + depth, T - depth, n_times)
        for t0 in dict.fromkeys(float(t) for t in tops):
            for x0 in centers:
                cyls.append(ParabolicCylinder(t0=t0, x0=x0, R=R, s=s))
    if not cyls:
        raise ValueError("the cylinder family came out empty; T is too small")
    return tuple(cyls)


def unit_cylinders(
    grid: Grid, T: float, s: float = 1.0, count: int = 20, t_floor: float = 1.0
) -> tuple:
    """Radius-1 cylinders with centers t0 > t_floor, spread over the horizon.

    These are the cylinders the moment bounds are stated on; centers
    alternate across the spatial sub-lattice so the family sees both the
    reaction zone and the far field.
    """
    depth = 1.0
    lo = max(t_floor, depth) + depth
    hi = T - depth
    if hi < lo:
        raise ValueError(f"horizon T = {T} too short for unit cylinders")
    if grid.L < 4.0:
        raise ValueError("unit cylinders need L >= 4 to avoid wrapping")
    tops = np.linspace(lo, hi, count)
    marks = grid.x[:: max(1, grid.N // 4)]
    cyls = []
    for q, t0 in enumerate(tops):
        c = marks[q % marks.size]
        x0 = (float(c),) * grid.n
        cyls.append(ParabolicCylinder(t0=float(t0), x0=x0, R=1.0, s=s))
    return tuple(cyls)


def _frame_range(stf: SpaceTimeField, cyl: ParabolicCylinder) -> tuple:
    eps = 1e-9 * stf.dt
    k_lo = int(np.ceil((cyl.t_lo - stf.t0 - eps) / stf.dt))
    k_hi = int(np.floor((cyl.t_hi - stf.t0 + eps) / stf.dt))
    return max(k_lo, 0), min(k_hi, stf.n_frames - 1)


def pack_cylinders(stf: SpaceTimeField, cylinders) -> tuple:
    """Flatten a family into (t_lo, t_hi, idx, offs) for the _accel kernels.

    Frame ranges are [t_lo, t_hi) per cylinder.  Raises when a cylinder
    has no frames or no grid points inside it; the family builders are
    expected to keep everything resolvable.
    """
    grid = stf.grid
    t_lo, t_hi, chunks, offs = [], [], [], [0]
    for q, cyl in enumerate(cylinders):
        k_lo, k_hi = _frame_range(stf, cyl)
        if k_hi < k_lo:
            raise ValueError(f"cylinder {q} contains no stored frames")
        mask = grid.distance_from(cyl.x0) <= cyl.R * (1.0 + 1e-12)
        pts = np.flatnonzero(mask.ravel())
        if pts.size == 0:
            raise ValueError(f"cylinder {q} contains no grid points")
        t_lo.append(k_lo)
        t_hi.append(k_hi + 1)
        chunks.append(pts)
        offs.append(offs[-1] + pts.size)
    idx = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    return (
        np.asarray(t_lo, dtype=np.int64),
        np.asarray(t_hi, dtype=np.int64),
        idx.astype(np.int64),
        np.asarray(offs, dtype=np.int64),
    )


@dataclass(frozen=True)
class CylinderScan:
    """Per-cylinder mean and mean absolute deviation over a family."""

    cylinders: tuple
    means: np.ndarray
    mads: np.ndarray

    @property
    def seminorm(self) -> float:
        return float(self.mads.max())

    @property
    def worst(self) -> ParabolicCylinder:
        return self.cylinders[int(np.argmax(self.mads))]


def _flat(stf: SpaceTimeField) -> np.ndarray:
    return stf.frames.reshape(stf.n_frames, -1)


def _block(stf: SpaceTimeField, cyl: ParabolicCylinder) -> np.ndarray:
    t_lo, t_hi, idx, offs = pack_cylinders(stf, (cyl,))
    return _flat(stf)[t_lo[0] : t_hi[0]][:, idx]


def cylinder_average(stf: SpaceTimeField, cyl: ParabolicCylinder) -> float:
    """Space-time average of the field over one cylinder."""
    return float(_block(stf, cyl).mean())


def cylinder_scan(stf: SpaceTimeField, cylinders) -> CylinderScan:
    """Mean and mean absolute deviation for every cylinder in the family."""
    cylinders = tuple(cylinders)
    t_lo, t_hi, idx, offs = pack_cylinders(stf, cylinders)
    means, mads = cylinder_stats(_flat(stf), t_lo, t_hi, idx, offs)
    return CylinderScan(cylinders=cylinders, means=means, mads=mads)


def pbmo_seminorm(stf: SpaceTimeField, cylinders) -> float:
    """Largest mean oscillation over the family.

    Oscillation is the mean absolute deviation from the cylinder average,
    the L1 form of the parabolic BMO seminorm; the value is monotone
    nondecreasing as the family grows.
    """
    return cylinder_scan(stf, cylinders).seminorm


def _require_unit(cyl: ParabolicCylinder) -> None:
    if abs(cyl.R - 1.0) > 1e-9:
        raise ValueError(
            f"moment averages are defined on unit cylinders, got R = {cyl.R}"
        )


def exp_moment(V_fields, zbar, cyl: ParabolicCylinder) -> float:
    """Cylinder average of exp(zbar . V) over a unit cylinder.

    ``V_fields`` is the tuple of product fields; ``zbar`` one nonnegative
    coefficient per field.  The bounds this certifies are stated on
    radius-1 cylinders, so any other radius is refused rather than
    silently rescaled.
    """
    _require_unit(cyl)
    V_fields = tuple(V_fields)
    zbar = np.atleast_1d(np.asarray(zbar, dtype=float))
    if zbar.size != len(V_fields):
        raise ValueError(
            f"got {len(V_fields)} fields but {zbar.size} moment coefficients"
        )
    if np.any(zbar < 0):
        raise ValueError("moment coefficients must be nonnegative")
    acc = None
    for z, f in zip(zbar, V_fields):
        term = z * _block(f, cyl)
        acc = term if acc is None else acc + term
    return float(np.exp(acc).mean())


def subexp_moment(
    v: SpaceTimeField, r: float, rho: float, cyl: ParabolicCylinder
) -> float:
    """Cylinder average of exp(r * v^rho) over a unit cylinder, rho in (0, 1]."""
    _require_unit(cyl)
    if not r > 0:
        raise ValueError(f"moment coefficient must be > 0, got {r}")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"moment exponent rho must lie in (0, 1], got {rho}")
    block = _block(v, cyl)
    if block.min() < -1e-12:
        raise ValueError("sub-exponential moments are defined for v >= 0")
    return float(np.exp(r * np.clip(block, 0.0, None) ** rho).mean())


@dataclass(frozen=True)
class MomentReport:
    """Per-cylinder moment values with a uniform-boundedness verdict."""

    cylinders: tuple
    values: np.ndarray
    description: str

    @property
    def max_value(self) -> float:
        return float(self.values.max())

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    @property
    def spread(self) -> float:
        """max/min ratio; 1 means the moments are flat across the horizon."""
        return self.max_value / self.min_value

    @property
    def passed(self) -> bool:
        return bool(np.all(np.isfinite(self.values)) and self.values.size > 0)


def moment_report(
    V_fields=None,
    zbar=None,
    cylinders=(),
    v: SpaceTimeField = None,
    r: float = None,
    rho: float = None,
) -> MomentReport:
    """Evaluate exp or sub-exponential moments over a family of unit cylinders.

    Pass ``V_fields`` and ``zbar`` for the exponential form, or ``v``,
    ``r`` and ``rho`` for the sub-exponential one.
    """
    cylinders = tuple(cylinders)
    if not cylinders:
        raise ValueError("need at least one cylinder")
    if v is not None:
        values = np.array([subexp_moment(v, r, rho, q) for q in cylinders])
        desc = f"subexp moment r = {r}, rho = {rho}"
    else:
        values = np.array([exp_moment(V_fields, zbar, q) for q in cylinders])
        desc = f"exp moment zbar = {np.atleast_1d(zbar).tolist()}"
    return MomentReport(cylinders=cylinders, values=values, description=desc)


@dataclass(frozen=True)
class JNTailResult:
    """Level-set tail of |f - (f)_Q| on one cylinder, with a log-linear fit.

    fractions[i] is the relative measure of {|f - (f)_Q| >= levels[i]}
    inside Q.  ``slope`` is the fitted d log(measure) / d level on the
    window where the fraction lies in [fit_lo, fit_hi]; it is -inf for a
    degenerate (constant) field and nan when too few levels land in the
    window.
    """

    levels: np.ndarray
    fractions: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    n_fit: int
    deviation_scale: float

    @property
    def decaying(self) -> bool:
        return self.slope < 0.0 and np.isfinite(self.slope)


def jn_tail(
    stf: SpaceTimeField,
    cyl: ParabolicCylinder,
    levels=None,
    n_levels: int = 24,
    fit_lo: float = 1e-4,
    fit_hi: float = 0.5,
) -> JNTailResult:
    """Tail fractions at geometric levels over one cylinder, plus the fit.

    Default levels run from 0.1 to 10 times the cylinder's own mean
    absolute deviation.  The fit window [fit_lo, fit_hi] excludes the
    bulk (above) and the under-resolved extreme tail (below).
    """
    block = _block(stf, cyl)
    dev = np.abs(block - block.mean()).ravel()
    scale = float(dev.mean())
    if scale <= 1e-14 * max(1.0, float(np.abs(block).max())):
        lv = np.asarray(levels, dtype=float) if levels is not None else np.empty(0)
        return JNTailResult(
            levels=lv,
            fractions=np.zeros(lv.size),
            slope=float("-inf"),
            intercept=0.0,
            r_squared=1.0,
            n_fit=0,
            deviation_scale=scale,
        )
    if levels is None:
        levels = scale * np.geomspace(0.1, 10.0, n_levels)
    else:
        levels = np.asarray(levels, dtype=float)
        if levels.size < 3 or np.any(np.diff(levels) <= 0) or levels[0] <= 0:
            raise ValueError("levels must be positive and increasing")

    dev.sort()
    above = dev.size - np.searchsorted(dev, levels, side="left")
    fractions = above / dev.size

    window = (fractions >= fit_lo) & (fractions <= fit_hi)
    n_fit = int(window.sum())
    if n_fit < 3:
        return JNTailResult(levels, fractions, float("nan"), 0.0, 0.0,
                            n_fit, scale)
    x = levels[window]
    y = np.log(fractions[window])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return JNTailResult(levels, fractions, float(slope), float(intercept),
                        float(r_squared), n_fit, scale)


def sup_timeline(traj_or_fields) -> tuple:
    """Per-frame sup over space and species of the product fields.

    Accepts a trajectory (uses its v fields) or any iterable of
    space-time fields; returns (times, sups).
    """
    fields = getattr(traj_or_fields, "v", traj_or_fields)
    fields = tuple(fields)
    if not fields:
        raise ValueError("need at least one field")
    for f in fields[1:]:
        if f.n_frames != fields[0].n_frames:
            raise ValueError("fields disagree on the frame count")
    sups = np.zeros(fields[0].n_frames)
    for f in fields:
        flat = np.abs(f.frames.reshape(f.n_frames, -1))
        np.maximum(sups, flat.max(axis=1), out=sups)
    return fields[0].times.copy(), sups
