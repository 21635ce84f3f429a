#!/usr/bin/env python3
"""Timing harness for the cylinder-statistics kernels.

Runs the jit-compiled and pure-numpy implementations of the
per-cylinder mean/MAD pass on an identical packed family and reports
wall times.  The jit path is active when PYRODIFF_NUMBA is unset or
truthy and numba imports cleanly; otherwise only the numpy timing is
printed.

Usage:
    python3 benchmarks/bench_accel.py [--grid-n 2] [--grid-N 64]
        [--frames 400] [--copies 32] [--repeat 5]
"""

import argparse
import time

import numpy as np

from pyrodiff import _accel
from pyrodiff.analysis import pack_cylinders, standard_family
from pyrodiff.grids import SpaceTimeField, make_grid


def build_case(args):
    grid = make_grid(args.grid_n, args.grid_L, args.grid_N)
    rng = np.random.default_rng(args.seed)
    frames = rng.standard_normal((args.frames,) + grid.shape)
    dt = args.horizon / (args.frames - 1)
    stf = SpaceTimeField(grid, 0.0, dt, frames)
    family = tuple(standard_family(grid, args.horizon, s=1.0)) * args.copies
    packed = pack_cylinders(stf, family)
    flat = np.ascontiguousarray(stf.frames.reshape(stf.n_frames, -1))
    return flat, packed, len(family)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid-n", type=int, default=2)
    ap.add_argument("--grid-L", type=float, default=24.0)
    ap.add_argument("--grid-N", type=int, default=64)
    ap.add_argument("--frames", type=int, default=400)
    ap.add_argument("--horizon", type=float, default=20.0)
    ap.add_argument("--copies", type=int, default=32,
                    help="replications of the standard family")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    flat, packed, n_cyl = build_case(args)
    t_lo, t_hi, idx, offs = packed
    print(f"grid: n={args.grid_n} N={args.grid_N}, frames={args.frames}, "
          f"cylinders={n_cyl}, index entries={idx.size}")

    means_np = np.empty(n_cyl)
    mads_np = np.empty(n_cyl)
    t_numpy = best_of(
        lambda: _accel._cyl_stats_numpy(flat, t_lo, t_hi, idx, offs,
                                        means_np, mads_np),
        args.repeat,
    )
    print(f"numpy fallback : {t_numpy * 1e3:10.2f} ms")

    if not _accel.USE_NUMBA:
        print("jit path       :   disabled (PYRODIFF_NUMBA off or numba missing)")
        return

    means_jit = np.empty(n_cyl)
    mads_jit = np.empty(n_cyl)
    # first call pays the compile; time the warm kernel
    _accel._cyl_stats_jit(flat, t_lo, t_hi, idx, offs, means_jit, mads_jit)
    t_jit = best_of(
        lambda: _accel._cyl_stats_jit(flat, t_lo, t_hi, idx, offs,
                                      means_jit, mads_jit),
        args.repeat,
    )
    print(f"numba jit      : {t_jit * 1e3:10.2f} ms   "
          f"(speedup x{t_numpy / t_jit:.1f})")

    if not (np.allclose(means_np, means_jit, rtol=1e-12, atol=1e-14)
            and np.allclose(mads_np, mads_jit, rtol=1e-12, atol=1e-14)):
        raise SystemExit("paths disagree; results are not trustworthy")
    print("paths agree to 1e-12")


if __name__ == "__main__":
    main()
