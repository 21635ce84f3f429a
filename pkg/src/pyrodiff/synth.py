"""Deterministic initial data and forcing synthesis.

Everything here is band-limited trigonometric data, so fields are smooth,
exactly periodic, and reproducible from a seed.  The forcing synthesizer
returns a callable of continuous time, which lets refinement studies
sample the same forcing on different time lattices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Grid

__all__ = [
    "cosine_bump",
    "constant_field",
    "random_smooth_field",
    "ForcingSynth",
    "random_forcing",
]


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def cosine_bump(
    grid: Grid, center=None, height: float = 1.0, sharpness: int = 4
) -> np.ndarray:
    """Raised-cosine bump, height at the center, smooth and periodic.

    Per dimension: ((1 + cos(2 pi (x - c) / L)) / 2)^sharpness, a finite
    trigonometric polynomial, so it stays band-limited for moderate
    sharpness.
    """
    if center is None:
        center = (grid.L / 2.0,) * grid.n
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.size != grid.n:
        raise ValueError(f"center must have {grid.n} coordinates")
    if sharpness < 1 or sharpness > grid.N // 4:
        raise ValueError(f"sharpness must lie in [1, N/4], got {sharpness}")
    axes = []
    for d in range(grid.n):
        phase = 2.0 * np.pi * (grid.x - center[d]) / grid.L
        axes.append(((1.0 + np.cos(phase)) / 2.0) ** sharpness)
    if grid.n == 1:
        return height * axes[0]
    return height * axes[0][:, None] * axes[1][None, :]


def constant_field(grid: Grid, value: float) -> np.ndarray:
    return np.full(grid.shape, float(value))


def random_smooth_field(
    grid: Grid,
    seed,
    amplitude: float = 1.0,
    modes: int = 4,
    lo: float = 0.0,
) -> np.ndarray:
    """Random band-limited field rescaled to the range [lo, lo + amplitude].

    White noise is damped by a Gaussian spectral filter with cutoff around
    ``modes`` wavelengths per period, then shifted and scaled; the output
    range is exact, so the field is admissible initial data for any box
    chosen by the caller.
    """
    if not amplitude > 0:
        raise ValueError(f"amplitude must be > 0, got {amplitude}")
    rng = _as_rng(seed)
    noise = rng.standard_normal(grid.shape)
    k_cut = 2.0 * np.pi * modes / grid.L
    damp = np.exp(-grid.k2 / k_cut**2)
    f = grid.inverse(damp * grid.forward(noise))
    span = float(f.max() - f.min())
    if span == 0.0:
        return np.full(grid.shape, lo + amplitude / 2.0)
    return lo + (f - f.min()) * (amplitude / span)


@dataclass(frozen=True)
class ForcingSynth:
    """Bounded smooth forcing F(t, x) = sum_k a_k cos(w_k t + phi_k) psi_k(x).

    ``sup_bound`` dominates |F| uniformly in time, which is what the
    operator bounds need as the forcing scale.
    """

    grid: Grid
    amplitudes: np.ndarray
    omegas: np.ndarray
    phases: np.ndarray
    profiles: np.ndarray  # (K, ...) spatial shapes

    def __call__(self, t: float) -> np.ndarray:
        weights = self.amplitudes * np.cos(self.omegas * t + self.phases)
        return np.tensordot(weights, self.profiles, axes=(0, 0))

    @property
    def sup_bound(self) -> float:
        flat = np.abs(self.profiles).reshape(self.profiles.shape[0], -1)
        return float(np.sum(np.abs(self.amplitudes) * flat.max(axis=1)))

    def sample(self, times) -> np.ndarray:
        return np.stack([self(float(t)) for t in times])


def random_forcing(
    grid: Grid,
    seed,
    amplitude: float = 1.0,
    modes: int = 3,
    n_terms: int = 4,
    omega_max: float = 2.0,
) -> ForcingSynth:
    """Random forcing with ``n_terms`` oscillating smooth profiles.

    The profiles are centered (mean zero per term is not enforced) and
    individually bounded by 1, and the amplitudes sum to ``amplitude``,
    so ``sup_bound`` <= amplitude.
    """
    rng = _as_rng(seed)
    profiles = []
    for _ in range(n_terms):
        f = random_smooth_field(grid, rng, amplitude=2.0, modes=modes, lo=-1.0)
        profiles.append(f)
    raw = rng.uniform(0.5, 1.0, size=n_terms)
    amplitudes = amplitude * raw / raw.sum()
    omegas = rng.uniform(0.0, omega_max, size=n_terms)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_terms)
    return ForcingSynth(
        grid=grid,
        amplitudes=amplitudes,
        omegas=omegas,
        phases=phases,
        profiles=np.stack(profiles),
    )
