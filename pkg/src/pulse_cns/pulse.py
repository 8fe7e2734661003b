"""Short-pulse initial data family and its derived initial quantities.

The data are a density bump of width delta and amplitude delta^-alpha in
the pressure variable, plus a velocity whose divergence cancels the bump
at unit viscosity:

    rho0 = (1 + delta^-alpha * phi(x/delta))^(1/gamma)
    u0   = grad_amp * delta^(1-alpha) * (grad invlap phi)(x/delta)
           + v_amp * delta^(1-alpha/2) * v(x/delta)

with phi a Gaussian bump (max phi = phi_amp) and v a fixed Gaussian
x-profile. The gradient component is realized spectrally on the torus by
inverting the Laplacian on the mean-removed bump, which preserves the
cancellation div u0 - a0 = (v part) up to a measured constant of size
O(delta^3 / L^3); the boundary tail of the bump is monitored and runs
with delta > L/8 are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .fields import Grid, ScalarField, VectorField
from .solver import State


@dataclass(frozen=True)
class PulseParams:
    """Scale, amplitude, and fluid parameters for one data realization.

    grad_amp scales the pressure-balancing gradient component of u0
    (1.0 reproduces the exact div u0 = a0 + v-part cancellation; smaller
    values pick under-prepared members of the same family).
    """

    delta: float = 0.125
    alpha: float = 0.5
    gamma: float = 1.0
    mu: float = 1.0
    lam: float = 0.0
    epsilon: float = 0.1
    phi_amp: float = 1.0
    v_amp: float = 1.0
    grad_amp: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if not (self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (self.gamma >= 1.0):
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if not (self.mu > 0):
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if not (self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def nu(self) -> float:
        """Combined viscosity entering the effective viscous flux."""
        return self.mu + self.lam

    @property
    def amplitude(self) -> float:
        """Peak of rho^gamma - 1 at t = 0 (phi_amp * delta^-alpha)."""
        return self.phi_amp * self.delta ** (-self.alpha)

    @property
    def in_small_alpha_regime(self) -> bool:
        """Whether alpha satisfies the global-existence hypothesis."""
        return self.alpha <= 2.0 * self.gamma / (1.0 + 2.0 * self.gamma)


@dataclass
class InitDiagnostics:
    """Norms and scale-weighted energies of the initial data."""

    a0_Linf: float
    a0_L1: float
    a0_L2: float
    a0_L6: float
    F0_L2: float
    curl_u0_L2: float
    div_u0_L2: float
    H_rho0: float
    rho_udot0_L2: float
    E0_scaled: float
    grad_a0_L2: float
    grad_a0_L6: float
    boundary_tail: float


def pulse_profiles(params: PulseParams, grid: Grid):
    """Sampled bump phi(x/delta) and v-profile, centered in the box."""
    c = grid.length / 2.0
    X = grid.x
    r2 = sum(((x - c) / params.delta) ** 2 for x in X)
    bump = params.phi_amp * np.exp(-r2)
    v_prof = np.exp(-r2)
    return bump, v_prof


def boundary_tail(params: PulseParams, grid: Grid) -> float:
    """Largest bump value on the box boundary (face centers are worst)."""
    half_width = grid.length / (2.0 * params.delta)
    return float(params.phi_amp * np.exp(-(half_width**2)))


def build_pulse(params: PulseParams, grid: Grid) -> State:
    """Construct the initial state of the data family on a grid."""
    if params.delta > grid.length / 8.0:
        raise ValueError(
            f"pulse too wide for the box: delta={params.delta} > L/8={grid.length / 8.0} "
            f"(boundary tail {boundary_tail(params, grid):.3e})"
        )
    bump, v_prof = pulse_profiles(params, grid)
    a0 = params.delta ** (-params.alpha) * bump
    rho0 = (1.0 + a0) ** (1.0 / params.gamma)

    # potential component: solve Lap psi = bump - mean and take grad psi,
    # so its divergence equals a0 minus the box mean of a0
    u = -params.grad_amp * params.delta ** (-params.alpha) * spectral.grad_inv_laplacian_arr(
        grid, bump - bump.mean()
    )
    u[0] += params.v_amp * params.delta ** (1.0 - params.alpha / 2.0) * v_prof

    return State(t=0.0, rho=ScalarField(grid, rho0), u=VectorField(grid, u))


def derived_initials(state: State, params: PulseParams) -> InitDiagnostics:
    """All monitored norms of the initial data plus the weighted energy sum."""
    g = state.grid
    rho = state.rho.values
    if rho.min() <= 0:
        raise ValueError("initial density must be positive")
    u = state.u.values

    a = rho**params.gamma - 1.0
    div_u = spectral.div_arr(g, u)
    curl_u = spectral.curl_arr(g, u)
    F = div_u - a / params.nu

    # momentum-balance evaluation of the initial acceleration
    ah = spectral.rfft(g, a)
    grad_a = np.stack([spectral.irfft(g, K * ah) for K in g.ik])
    visc = params.mu * spectral.laplacian_arr(g, u)
    if params.lam != 0.0:
        visc += params.lam * spectral.grad_arr(g, div_u)
    sqrho_udot = (visc - grad_a) / np.sqrt(rho)

    if params.gamma == 1.0:
        h = rho * np.log(rho) - (rho - 1.0)
    else:
        h = ((rho**params.gamma - 1.0) - params.gamma * (rho - 1.0)) / (params.gamma - 1.0)
    H0 = float(h.sum() * g.cell_volume)

    norm = spectral.lp_norm_arr
    sq_rho_u = float(np.sum(rho * (u[0] ** 2 + u[1] ** 2 + u[2] ** 2)) * g.cell_volume)
    lead = params.delta ** (params.alpha - 3.0)
    tail = params.delta ** (2.0 * params.alpha - 1.0)
    e0 = lead * (sq_rho_u + norm(g, curl_u, 2.0) ** 2 + norm(g, F, 2.0) ** 2 + H0) + tail * (
        norm(g, sqrho_udot, 2.0) ** 2 + norm(g, div_u, 2.0) ** 2 + norm(g, a, 6.0) ** 2
    )

    return InitDiagnostics(
        a0_Linf=norm(g, a, np.inf),
        a0_L1=norm(g, a, 1.0),
        a0_L2=norm(g, a, 2.0),
        a0_L6=norm(g, a, 6.0),
        F0_L2=norm(g, F, 2.0),
        curl_u0_L2=norm(g, curl_u, 2.0),
        div_u0_L2=norm(g, div_u, 2.0),
        H_rho0=H0,
        rho_udot0_L2=norm(g, sqrho_udot, 2.0),
        E0_scaled=float(e0),
        grad_a0_L2=norm(g, grad_a, 2.0),
        grad_a0_L6=norm(g, grad_a, 6.0),
        boundary_tail=boundary_tail(params, g),
    )
