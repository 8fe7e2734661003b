"""Spectral differential operators and Lp norms on the periodic cube.

All derivatives act on the trigonometric interpolant, so composition
identities (div curl = 0, curl grad = 0, and laplacian after the
positive-operator inverse giving back the negated mean-removed field)
hold to roundoff. The forward transform convention carries
1/n^3, making Parseval read ||f||_L2^2 = L^3 * sum_k w_k |fhat_k|^2 with
the half-spectrum multiplicities w_k; quadrature weight dx^3 matches.

Thread use of the FFT backend is capped by PULSE_CNS_THREADS (default 1
worker beyond the main thread when available).
"""

from __future__ import annotations

import os

import numpy as np
from scipy import fft as _fft

from .fields import Field, Grid, ScalarField, VectorField

DERIVATIVE_KINDS = ("grad", "div", "curl", "laplacian", "inv_laplacian", "grad_inv_laplacian")


def fft_workers() -> int:
    env = os.environ.get("PULSE_CNS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(2, os.cpu_count() or 1)


def rfft(grid: Grid, values: np.ndarray) -> np.ndarray:
    return _fft.rfftn(values, workers=fft_workers())


def irfft(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return _fft.irfftn(coeffs, s=(grid.n,) * 3, workers=fft_workers())


def coefficients(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Normalized spectral coefficients (forward transform carries 1/n^3)."""
    return rfft(grid, values) / grid.n**3


def dealias_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Spherical 2/3-rule truncation of a physical-space array."""
    return irfft(grid, rfft(grid, values) * grid.dealias_mask)


def _require_finite(values: np.ndarray):
    if not np.isfinite(values).all():
        raise ValueError("field contains non-finite samples")


# ---------------------------------------------------------------------------
# raw-array operators (hot path used by the solver)
# ---------------------------------------------------------------------------

def grad_arr(grid: Grid, f: np.ndarray) -> np.ndarray:
    fh = rfft(grid, f)
    return np.stack([irfft(grid, K * fh) for K in grid.ik])


def div_arr(grid: Grid, v: np.ndarray) -> np.ndarray:
    s = sum(grid.ik[i] * rfft(grid, v[i]) for i in range(3))
    return irfft(grid, s)


def curl_arr(grid: Grid, v: np.ndarray) -> np.ndarray:
    vh = [rfft(grid, v[i]) for i in range(3)]
    ikx, iky, ikz = grid.ik
    return np.stack([
        irfft(grid, iky * vh[2] - ikz * vh[1]),
        irfft(grid, ikz * vh[0] - ikx * vh[2]),
        irfft(grid, ikx * vh[1] - iky * vh[0]),
    ])


def laplacian_arr(grid: Grid, f: np.ndarray) -> np.ndarray:
    if f.ndim == 4:
        return np.stack([irfft(grid, -grid.k_sq * rfft(grid, f[i])) for i in range(3)])
    return irfft(grid, -grid.k_sq * rfft(grid, f))


def inv_laplacian_arr(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Inverse of the positive operator -Lap (zero mode projected out)."""
    fh = rfft(grid, f)
    fh[grid.k_sq == 0.0] = 0.0  # zero mode and the cleaned Nyquist planes
    return irfft(grid, fh / grid.k_sq_safe)


def grad_inv_laplacian_arr(grid: Grid, f: np.ndarray) -> np.ndarray:
    fh = rfft(grid, f)
    fh[grid.k_sq == 0.0] = 0.0
    fh = fh / grid.k_sq_safe
    return np.stack([irfft(grid, K * fh) for K in grid.ik])


# ---------------------------------------------------------------------------
# field-level API
# ---------------------------------------------------------------------------

def spectral_derivative(f: Field, kind: str) -> Field:
    """Apply one of the supported spectral operators to a field.

    grad, inv_laplacian, grad_inv_laplacian act on scalars; div and curl
    act on vectors; laplacian acts on either. inv_laplacian projects out
    the zero mode of its input and returns a zero-mean result.
    """
    if kind not in DERIVATIVE_KINDS:
        raise ValueError(f"unknown derivative kind {kind!r}; expected one of {DERIVATIVE_KINDS}")
    _require_finite(f.values)
    g = f.grid
    scalar = isinstance(f, ScalarField)
    if kind == "grad":
        if not scalar:
            raise ValueError("grad expects a scalar field")
        return VectorField(g, grad_arr(g, f.values))
    if kind == "div":
        if scalar:
            raise ValueError("div expects a vector field")
        return ScalarField(g, div_arr(g, f.values))
    if kind == "curl":
        if scalar:
            raise ValueError("curl expects a vector field")
        return VectorField(g, curl_arr(g, f.values))
    if kind == "laplacian":
        out = laplacian_arr(g, f.values)
        return ScalarField(g, out) if scalar else VectorField(g, out)
    if kind == "inv_laplacian":
        if not scalar:
            raise ValueError("inv_laplacian expects a scalar field")
        return ScalarField(g, inv_laplacian_arr(g, f.values))
    # grad_inv_laplacian
    if not scalar:
        raise ValueError("grad_inv_laplacian expects a scalar field")
    return VectorField(g, grad_inv_laplacian_arr(g, f.values))


def grad(f: ScalarField) -> VectorField:
    return spectral_derivative(f, "grad")


def div(v: VectorField) -> ScalarField:
    return spectral_derivative(v, "div")


def curl(v: VectorField) -> VectorField:
    return spectral_derivative(v, "curl")


def dealias(f: Field) -> Field:
    out = dealias_values(f.grid, f.values) if f.values.ndim == 3 else np.stack(
        [dealias_values(f.grid, f.values[i]) for i in range(3)]
    )
    return type(f)(f.grid, out)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def _magnitude(values: np.ndarray) -> np.ndarray:
    if values.ndim == 4:
        return np.sqrt(values[0] ** 2 + values[1] ** 2 + values[2] ** 2)
    return np.abs(values)


def lp_norm_arr(grid: Grid, values: np.ndarray, p: float) -> float:
    mag = _magnitude(values)
    if np.isinf(p):
        return float(mag.max())
    if p == 2.0:
        return float(np.sqrt(np.sum(mag * mag) * grid.cell_volume))
    return float((np.sum(mag**p) * grid.cell_volume) ** (1.0 / p))


def lp_norm(f: Field, p: float) -> float:
    """Grid-quadrature Lp norm; vectors use the pointwise Euclidean magnitude."""
    if not (p >= 1.0):
        raise ValueError(f"Lp norm needs p >= 1, got {p}")
    _require_finite(f.values)
    return lp_norm_arr(f.grid, f.values, float(p))


def l2_norm_sq_arr(grid: Grid, values: np.ndarray) -> float:
    v = np.asarray(values)
    return float(np.sum(v * v) * grid.cell_volume)


def grad_norm_sq_arr(grid: Grid, v: np.ndarray) -> float:
    """Squared L2 norm of the full gradient (Frobenius over components)."""
    total = 0.0
    comps = v if v.ndim == 4 else v[None]
    for c in comps:
        ch = coefficients(grid, c)
        for K in grid.ik:
            total += np.sum(grid.spectral_weights * np.abs(K * ch) ** 2)
    return float(total * grid.length**3)


def parseval_l2_sq(f: Field) -> float:
    """||f||_L2^2 evaluated in spectral space (cross-check for quadrature)."""
    g = f.grid
    comps = f.values if f.values.ndim == 4 else f.values[None]
    total = 0.0
    for c in comps:
        ch = coefficients(g, c)
        total += np.sum(g.spectral_weights * np.abs(ch) ** 2)
    return float(total * g.length**3)


def mean_value(f: ScalarField) -> float:
    return float(f.values.mean())
