"""Synthetic band-limited fields for identity checks and property tests."""

from __future__ import annotations

import numpy as np

from . import spectral
from .fields import Grid, ScalarField, VectorField
from .solver import State


def random_scalar(grid: Grid, rng: np.random.Generator, k_max: int | None = None,
                  amplitude: float = 1.0, zero_mean: bool = True) -> ScalarField:
    """Random real field with spectrum supported in |k| <= k_max."""
    if k_max is None:
        k_max = grid.n // 4
    vals = rng.standard_normal((grid.n,) * 3)
    fh = spectral.rfft(grid, vals)
    KX, KY, KZ = grid._kint
    fh *= np.sqrt(KX**2 + KY**2 + KZ**2) <= k_max
    if zero_mean:
        fh[0, 0, 0] = 0.0
    out = spectral.irfft(grid, fh)
    peak = np.abs(out).max()
    if peak > 0:
        out *= amplitude / peak
    return ScalarField(grid, out)


def random_vector(grid: Grid, rng: np.random.Generator, k_max: int | None = None,
                  amplitude: float = 1.0) -> VectorField:
    comps = [random_scalar(grid, rng, k_max, amplitude).values for _ in range(3)]
    return VectorField(grid, np.stack(comps))


def random_state(grid: Grid, rng: np.random.Generator, k_max: int | None = None,
                 rho_contrast: float = 0.3, u_amplitude: float = 0.5) -> State:
    """Random positive-density state with band-limited fields."""
    rho = 1.0 + random_scalar(grid, rng, k_max, rho_contrast).values
    u = random_vector(grid, rng, k_max, u_amplitude)
    return State(0.0, ScalarField(grid, rho), u)
