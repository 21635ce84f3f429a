"""Hot loops for cylinder-family statistics, with a numba and a numpy path.

The diagnostics sweep thousands of space-time cylinders over stored frame
stacks; the per-cylinder two-pass scan (mean, then mean absolute deviation)
is the one genuinely loop-bound kernel in the package.  It is compiled with
``numba.njit`` when numba is importable, with a vectorised pure-numpy
fallback.  Set ``PYRODIFF_NUMBA=0`` to force the fallback; the benchmark in
``benchmarks/bench_accel.py`` compares the two.

Cylinders are passed in packed (CSR-like) form: a flat array of spatial
point indices plus per-cylinder offsets, with an inclusive/exclusive frame
range per cylinder.  Both paths are deterministic: per-cylinder results are
written to independent output slots and inner sums run in a fixed order.
"""

from __future__ import annotations

import os

import numpy as np

_env = os.environ.get("PYRODIFF_NUMBA", "1").strip().lower()
USE_NUMBA = _env not in ("0", "false", "off", "no")

if USE_NUMBA:
    try:
        from numba import njit, prange
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if not USE_NUMBA:
    # stand-ins so the jitted definitions below still parse
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap

    prange = range


@njit(cache=True, parallel=True)
def _cyl_stats_jit(flat, t_lo, t_hi, idx, offs, means, mads):
    # flat: (K, P) frame stack; one row of outputs per cylinder
    for c in prange(t_lo.size):
        a = t_lo[c]
        b = t_hi[c]
        i0 = offs[c]
        i1 = offs[c + 1]
        npts = (b - a) * (i1 - i0)
        acc = 0.0
        for k in range(a, b):
            row = flat[k]
            for j in range(i0, i1):
                acc += row[idx[j]]
        mu = acc / npts
        dev = 0.0
        for k in range(a, b):
            row = flat[k]
            for j in range(i0, i1):
                dev += abs(row[idx[j]] - mu)
        means[c] = mu
        mads[c] = dev / npts


def _cyl_stats_numpy(flat, t_lo, t_hi, idx, offs, means, mads):
    for c in range(t_lo.size):
        block = flat[t_lo[c] : t_hi[c]][:, idx[offs[c] : offs[c + 1]]]
        mu = block.mean()
        means[c] = mu
        mads[c] = np.abs(block - mu).mean()


def cylinder_stats(flat, t_lo, t_hi, idx, offs):
    """Per-cylinder mean and mean absolute deviation over packed cylinders.

    Parameters
    ----------
    flat : (K, P) float64
        Frame stack with spatial dimensions flattened.
    t_lo, t_hi : (C,) int64
        Frame range [t_lo, t_hi) of each cylinder.
    idx : (m,) int64
        Concatenated flattened spatial indices of all cylinders.
    offs : (C+1,) int64
        Slice offsets into ``idx`` per cylinder.

    Returns
    -------
    (means, mads) : pair of (C,) float64 arrays
    """
    flat = np.ascontiguousarray(flat, dtype=np.float64)
    t_lo = np.asarray(t_lo, dtype=np.int64)
    t_hi = np.asarray(t_hi, dtype=np.int64)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    offs = np.asarray(offs, dtype=np.int64)
    means = np.empty(t_lo.size, dtype=np.float64)
    mads = np.empty(t_lo.size, dtype=np.float64)
    if t_lo.size == 0:
        return means, mads
    if USE_NUMBA:
        _cyl_stats_jit(flat, t_lo, t_hi, idx, offs, means, mads)
    else:
        _cyl_stats_numpy(flat, t_lo, t_hi, idx, offs, means, mads)
    return means, mads


@njit(cache=True, parallel=True)
def _cyl_mean_jit(flat, t_lo, t_hi, idx, offs, means):
    for c in prange(t_lo.size):
        a = t_lo[c]
        b = t_hi[c]
        i0 = offs[c]
        i1 = offs[c + 1]
        acc = 0.0
        for k in range(a, b):
            row = flat[k]
            for j in range(i0, i1):
                acc += row[idx[j]]
        means[c] = acc / ((b - a) * (i1 - i0))


def _cyl_mean_numpy(flat, t_lo, t_hi, idx, offs, means):
    for c in range(t_lo.size):
        means[c] = flat[t_lo[c] : t_hi[c]][:, idx[offs[c] : offs[c + 1]]].mean()


def cylinder_means(flat, t_lo, t_hi, idx, offs):
    """Per-cylinder mean over packed cylinders (single pass)."""
    flat = np.ascontiguousarray(flat, dtype=np.float64)
    t_lo = np.asarray(t_lo, dtype=np.int64)
    t_hi = np.asarray(t_hi, dtype=np.int64)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    offs = np.asarray(offs, dtype=np.int64)
    means = np.empty(t_lo.size, dtype=np.float64)
    if t_lo.size == 0:
        return means
    if USE_NUMBA:
        _cyl_mean_jit(flat, t_lo, t_hi, idx, offs, means)
    else:
        _cyl_mean_numpy(flat, t_lo, t_hi, idx, offs, means)
    return means
