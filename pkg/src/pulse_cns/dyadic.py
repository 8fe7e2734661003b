"""Dyadic frequency decomposition: smooth band projectors and Besov norms.

The band profile is built by mollifying a step with the classic
exp(-1/t) smoothstep

    S(t) = B(t) / (B(t) + B(1-t)),  B(t) = exp(-1/t) for t > 0 else 0,

so the low-pass cutoff chi equals 1 on [0, 3/4], vanishes on [4/3, inf)
and is C-infinity monotone in between. The band bump is the telescope
difference phi(tau) = chi(tau/2) - chi(tau): nonnegative, supported in
[3/4, 8/3], and chi(tau) + sum_{j>=0} phi(2^-j tau) = 1 identically for
every tau >= 0 (finite telescoping sum, exact up to roundoff).

A matrix Fourier multiplier built from phi enters the quantitative
analysis through the L1 norm of its kernel; `projection_kernel_l1`
evaluates it by reducing the inverse transform of the radial symbol to
spherical Bessel quadratures.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import spherical_jn

from .fields import Field, Grid
from .spectral import irfft, lp_norm_arr, rfft

_SUPPORT_LO = 3.0 / 4.0
_SUPPORT_HI = 8.0 / 3.0
_CHI_HI = 4.0 / 3.0


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        b = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b1 = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return b / (b + b1)


def chi_profile(tau) -> np.ndarray:
    """Smooth low-pass cutoff: 1 on [0, 3/4], 0 on [4/3, inf)."""
    return _smoothstep((_CHI_HI - np.asarray(tau, dtype=float)) / (_CHI_HI - _SUPPORT_LO))


def phi_profile(tau) -> np.ndarray:
    """Smooth band bump supported in [3/4, 8/3], nonnegative."""
    tau = np.asarray(tau, dtype=float)
    return chi_profile(tau / 2.0) - chi_profile(tau)


@dataclass(frozen=True)
class DyadicBank:
    """Band projectors resolvable on one grid.

    j_range covers every band whose support [3/4 * 2^j, 8/3 * 2^j]
    intersects the grid's nonzero frequencies [2*pi/L, sqrt(3)*pi*n/L];
    bands outside are identically zero on the grid and are dropped.
    """

    grid: Grid
    j_min: int
    j_max: int

    @classmethod
    def for_grid(cls, grid: Grid) -> "DyadicBank":
        xi_lo = 2.0 * np.pi / grid.length
        xi_hi = np.sqrt(3.0) * np.pi * grid.n / grid.length
        j_min = int(np.floor(np.log2(xi_lo / _SUPPORT_HI)))
        j_max = int(np.ceil(np.log2(xi_hi / _SUPPORT_LO)))
        return cls(grid, j_min, j_max)

    @property
    def j_range(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def band_multiplier(self, j: int) -> np.ndarray:
        return phi_profile(self.grid.k_mag / 2.0**j)

    def low_multiplier(self) -> np.ndarray:
        return chi_profile(self.grid.k_mag)


def _project(f: Field, mult: np.ndarray) -> Field:
    g = f.grid
    if f.values.ndim == 4:
        out = np.stack([irfft(g, mult * rfft(g, f.values[i])) for i in range(3)])
    else:
        out = irfft(g, mult * rfft(g, f.values))
    return type(f)(g, out)


def dyadic_project(f: Field, j: int, bank: DyadicBank) -> Field:
    """Apply the band-j projector (multiplier phi(|xi| / 2^j))."""
    if j not in bank.j_range:
        raise ValueError(f"band index {j} outside resolvable range "
                         f"[{bank.j_min}, {bank.j_max}] for n={bank.grid.n}")
    return _project(f, bank.band_multiplier(j))


def low_block(f: Field, bank: DyadicBank) -> Field:
    """Apply the inhomogeneous low block (multiplier chi(|xi|))."""
    return _project(f, bank.low_multiplier())


def besov_norm(f: Field, s: float, p: float, r: float, bank: DyadicBank) -> float:
    """Homogeneous dyadic norm: l^r over bands of 2^(j s) ||band_j f||_Lp.

    Only the grid-resolvable bands contribute (see DyadicBank.j_range);
    the zero mode never enters because every band bump vanishes at 0.
    """
    if not (p >= 1.0 and r >= 1.0):
        raise ValueError("besov_norm needs p, r >= 1")
    g = f.grid
    comps = f.values if f.values.ndim == 4 else f.values[None]
    hats = [rfft(g, c) for c in comps]
    terms = []
    for j in bank.j_range:
        mult = bank.band_multiplier(j)
        if not mult.any():
            continue
        block = np.stack([irfft(g, mult * h) for h in hats])
        if block.shape[0] == 1:
            block = block[0]
        terms.append(2.0 ** (j * s) * lp_norm_arr(g, block, p))
    if not terms:
        return 0.0
    t = np.array(terms)
    if np.isinf(r):
        return float(t.max())
    return float((t**r).sum() ** (1.0 / r))


# ---------------------------------------------------------------------------
# L1 norm of the band kernel
# ---------------------------------------------------------------------------

def _radial_kernels(r: np.ndarray, quad_n: int):
    """k_l(r) = (2 pi^2)^-1 int phi(s) s^2 j_l(s r) ds for l = 0, 2.

    These are the radial components of the inverse Fourier transform
    (convention (2 pi)^-3 int e^{i x.xi}) of phi(|xi|) against the l = 0
    and l = 2 spherical harmonics; the integrand is supported in the bump
    interval [3/4, 8/3].
    """
    nodes, wts = leggauss(quad_n)
    s = 0.5 * (nodes + 1.0) * (_SUPPORT_HI - _SUPPORT_LO) + _SUPPORT_LO
    w = 0.5 * wts * (_SUPPORT_HI - _SUPPORT_LO)
    ph = phi_profile(s) * s**2 * w
    rr = np.atleast_1d(r)[:, None]
    k0 = (ph * spherical_jn(0, s * rr)).sum(axis=1) / (2.0 * np.pi**2)
    k2 = (ph * spherical_jn(2, s * rr)).sum(axis=1) / (2.0 * np.pi**2)
    return k0, k2


def _kernel_l1(quad_n: int, symbol: str, r_max: float | None = None) -> float:
    if r_max is None:
        r_max = 0.625 * quad_n  # grows with refinement so the tail converges too
    r = np.linspace(0.0, r_max, 64 * quad_n + 1)
    k0, k2 = _radial_kernels(r, quad_n)
    if symbol == "identity":
        op_norm = np.abs(k0)
    elif symbol == "projection":
        # kernel of (xi xi^T / |xi|^2) phi(|xi|): k0/3 I - k2 (xhat xhat^T - I/3);
        # eigenvalues k0/3 - 2 k2/3 (along xhat) and k0/3 + k2/3 (twice).
        op_norm = np.maximum(np.abs(k0 / 3.0 - 2.0 * k2 / 3.0), np.abs(k0 / 3.0 + k2 / 3.0))
    else:
        raise ValueError(f"unknown symbol {symbol!r}")
    return float(np.trapezoid(4.0 * np.pi * r**2 * op_norm, r))


@lru_cache(maxsize=32)
def projection_kernel_l1(quad_n: int = 128, r_max: float | None = None) -> float:
    """L1 norm of the kernel of the matrix multiplier (xi xi^T/|xi|^2) phi(|xi|),
    with the 3x3 operator norm taken pointwise."""
    if quad_n < 8:
        raise ValueError("quad_n too small for the band quadrature")
    return _kernel_l1(quad_n, "projection", r_max)


@lru_cache(maxsize=32)
def identity_kernel_l1(quad_n: int = 128, r_max: float | None = None) -> float:
    """L1 norm of the scalar band kernel (symbol phi(|xi|) * identity)."""
    return _kernel_l1(quad_n, "identity", r_max)


def cbar_star(quad_n: int = 128, check_convergence: bool = True) -> float:
    """The band-kernel constant; raises if doubling quad_n moves it > 1%."""
    val = projection_kernel_l1(quad_n)
    if check_convergence:
        ref = projection_kernel_l1(2 * quad_n)
        if abs(val - ref) > 0.01 * abs(ref):
            raise RuntimeError(
                f"band-kernel quadrature not converged: {val:.6f} vs {ref:.6f} "
                f"at quad_n={quad_n} vs {2 * quad_n}"
            )
    return val
