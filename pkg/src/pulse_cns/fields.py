"""Periodic-grid bookkeeping and field containers.

The simulation domain is a triply periodic cube [0, L)^3 sampled on an
n^3 collocation grid. Real fields are stored as float64 arrays in
row-major (x, y, z) order; all spectral machinery (wavenumbers, dealias
mask, Parseval weights for the half-spectrum layout) is precomputed once
per grid and cached.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic cube: n points per axis, side length `length`."""

    n: int
    length: float = 1.0

    def __post_init__(self):
        if self.n < 8 or not _is_power_of_two(self.n):
            raise ValueError(f"grid size must be a power of two >= 8, got n={self.n}")
        if not (self.length > 0):
            raise ValueError(f"box length must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    @property
    def nyquist(self) -> float:
        """Largest resolvable axis frequency pi*n/L."""
        return np.pi * self.n / self.length

    @cached_property
    def x(self):
        """Coordinate meshes (3 arrays of shape (n, n, n))."""
        ax = np.arange(self.n) * self.dx
        return np.meshgrid(ax, ax, ax, indexing="ij")

    # -- spectral layout (rfftn: last axis holds n//2+1 modes) ------------

    @cached_property
    def _kint(self):
        """Integer wavenumber meshes in the half-spectrum layout."""
        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n)
        kz = np.arange(self.n // 2 + 1, dtype=float)
        return np.meshgrid(k1, k1, kz, indexing="ij")

    @cached_property
    def ik(self):
        """i*xi multiplier per axis, with the Nyquist plane zeroed.

        Odd-order derivatives of the unmatched n/2 mode are ill-defined for
        real fields, so that plane is dropped from every derivative.
        """
        scale = 2.0 * np.pi / self.length
        out = []
        for K in self._kint:
            K = K.copy()
            K[np.abs(K) == self.n // 2] = 0.0
            out.append(1j * scale * K)
        return tuple(out)

    @cached_property
    def k_sq(self):
        """|xi|^2 built from the same (Nyquist-cleaned) multipliers."""
        return sum((-(K * K)).real for K in self.ik)

    @cached_property
    def k_sq_safe(self):
        """|xi|^2 with zeros replaced by 1 (Poisson solves; the zero mode and
        the cleaned Nyquist planes carry no derivative content)."""
        return np.where(self.k_sq == 0.0, 1.0, self.k_sq)

    @cached_property
    def dealias_mask(self):
        """Spherical 2/3-rule mask |k| <= n/3 in integer wavenumbers."""
        KX, KY, KZ = self._kint
        return np.sqrt(KX**2 + KY**2 + KZ**2) <= self.n / 3.0

    @cached_property
    def spectral_weights(self):
        """Multiplicity of each half-spectrum mode under Parseval.

        kz = 0 and kz = n/2 planes are self-conjugate (weight 1); every
        other retained mode represents itself and its conjugate (weight 2).
        """
        w = np.full(self._kint[0].shape, 2.0)
        w[:, :, 0] = 1.0
        w[:, :, -1] = 1.0
        return w

    @cached_property
    def k_mag(self):
        """Physical |xi| per half-spectrum mode (full arrays, no cleaning)."""
        scale = 2.0 * np.pi / self.length
        KX, KY, KZ = self._kint
        return scale * np.sqrt(KX**2 + KY**2 + KZ**2)


def _check_values(grid: Grid, values: np.ndarray, rank: int, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    want = (3,) * (rank == 1) + (grid.n,) * 3
    if rank == 1:
        want = (3, grid.n, grid.n, grid.n)
    else:
        want = (grid.n, grid.n, grid.n)
    if values.shape != want:
        raise ValueError(f"{what} shape {values.shape} does not match grid {want}")
    if not np.isfinite(values).all():
        raise ValueError(f"{what} contains non-finite samples")
    return values


@dataclass
class ScalarField:
    """Real samples of a scalar on a grid (row-major)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = _check_values(self.grid, self.values, 0, "scalar field")

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros((grid.n,) * 3))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "ScalarField":
        return cls(grid, np.full((grid.n,) * 3, float(c)))


@dataclass
class VectorField:
    """Three scalar components on a shared grid, stacked as (3, n, n, n)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = _check_values(self.grid, self.values, 1, "vector field")

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.values.copy())

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.values[i])

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((3,) + (grid.n,) * 3))

    @classmethod
    def from_components(cls, cx: ScalarField, cy: ScalarField, cz: ScalarField) -> "VectorField":
        if not (cx.grid == cy.grid == cz.grid):
            raise ValueError("vector components must share one grid")
        return cls(cx.grid, np.stack([cx.values, cy.values, cz.values]))


Field = ScalarField | VectorField
