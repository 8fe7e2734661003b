"""Time integration of the compressible flow on the periodic cube.

Mass is advanced in conservative flux form (spectral divergence, so the
box integral of rho is preserved to roundoff); momentum in velocity
form. Two schemes:

  explicit_rk4  classic RK4, stability limited by the viscous step
                restriction dx^2 scale at unit viscosity;
  imex          two-stage, second-order, stiffly accurate additive
                Runge-Kutta scheme: a constant-coefficient shifted
                diffusion operator nu_I * Lap (+ lam_I * grad div) with
                nu_I = mu / min(rho) is treated implicitly (diagonal in
                Fourier space), everything else explicitly. Taking nu_I
                at the global maximum of the variable coefficient keeps
                the explicit remainder (mu/rho - nu_I) * Lap u stable at
                advective step sizes.

Positivity is monitored, never enforced: a density minimum at or below
the configured floor aborts the run with the offending time.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from . import spectral
from .fields import Grid, ScalarField, VectorField


class PositivityError(RuntimeError):
    """Density minimum reached the positivity floor."""

    def __init__(self, t: float, min_rho: float):
        super().__init__(f"density floor breached at t={t:.6g} (min rho = {min_rho:.3e})")
        self.t = t
        self.min_rho = min_rho


@dataclass
class State:
    """Density and velocity at one time instant."""

    t: float
    rho: ScalarField
    u: VectorField

    def __post_init__(self):
        if self.rho.grid != self.u.grid:
            raise ValueError("rho and u must share one grid")
        if self.rho.values.min() <= 0.0:
            raise ValueError("density must be positive everywhere")

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def copy(self) -> "State":
        return State(self.t, self.rho.copy(), self.u.copy())

    def mass(self) -> float:
        return float(self.rho.values.sum() * self.grid.cell_volume)

    @classmethod
    def equilibrium(cls, grid: Grid) -> "State":
        return cls(0.0, ScalarField.constant(grid, 1.0), VectorField.zeros(grid))


@dataclass(frozen=True)
class SolverConfig:
    dt_init: float = 1e-3
    cfl_safety: float = 0.4
    t_end: float = 0.5
    dealias: bool = True
    scheme: str = "imex"
    checkpoint_every: int = 0
    diagnostics_every: int = 1
    positivity_floor: float = 1e-6
    adapt_dt: bool = True

    def __post_init__(self):
        if not (self.dt_init > 0):
            raise ValueError("dt_init must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.scheme not in ("explicit_rk4", "imex"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class RunSummary:
    steps: int = 0
    final_time: float = 0.0
    min_rho: float = np.inf
    max_rho: float = 0.0
    mass_initial: float = 0.0
    mass_final: float = 0.0
    wall_time: float = 0.0
    aborted: bool = False
    abort_reason: str = ""

    @property
    def mass_drift(self) -> float:
        if self.mass_initial == 0.0:
            return 0.0
        return abs(self.mass_final - self.mass_initial) / abs(self.mass_initial)


# forcing(t, grid) -> (f_rho, f_u) arrays, or None
Forcing = Callable[[float, Grid], tuple[np.ndarray, np.ndarray]]


def _tendencies(grid: Grid, rho: np.ndarray, u: np.ndarray, params, dealias: bool,
                forcing: Optional[Forcing], t: float, want_uhat: bool = False):
    """Right-hand side on raw arrays.

    Returns (drho, du) and, when requested, the velocity spectrum for
    reuse by the implicit stage of the IMEX scheme.
    """
    mask = grid.dealias_mask if dealias else 1.0
    uh = [spectral.rfft(grid, u[i]) for i in range(3)]

    # conservative mass flux
    mh = [spectral.rfft(grid, rho * u[i]) * mask for i in range(3)]
    drho = -spectral.irfft(grid, grid.ik[0] * mh[0] + grid.ik[1] * mh[1] + grid.ik[2] * mh[2])

    # advection (u . grad) u
    gu = [[spectral.irfft(grid, K * uh[i]) for K in grid.ik] for i in range(3)]
    adv = np.empty_like(u)
    for i in range(3):
        prod = u[0] * gu[i][0] + u[1] * gu[i][1] + u[2] * gu[i][2]
        if dealias:
            prod = spectral.irfft(grid, spectral.rfft(grid, prod) * mask)
        adv[i] = prod

    # pressure gradient
    if params.gamma == 1.0:
        ph = spectral.rfft(grid, rho)
    else:
        ph = spectral.rfft(grid, rho**params.gamma) * mask
    gp = np.stack([spectral.irfft(grid, K * ph) for K in grid.ik])

    # viscous stress
    visc = np.stack([spectral.irfft(grid, -grid.k_sq * uh[i]) for i in range(3)]) * params.mu
    if params.lam != 0.0:
        divh = grid.ik[0] * uh[0] + grid.ik[1] * uh[1] + grid.ik[2] * uh[2]
        visc += params.lam * np.stack([spectral.irfft(grid, K * divh) for K in grid.ik])

    du = (visc - gp) / rho - adv
    if forcing is not None:
        f_rho, f_u = forcing(t, grid)
        drho = drho + f_rho
        du = du + f_u
    return (drho, du, uh) if want_uhat else (drho, du)


def rhs(state: State, params, config: SolverConfig = SolverConfig(),
        forcing: Optional[Forcing] = None) -> tuple[ScalarField, VectorField]:
    """Instantaneous tendencies (drho/dt, du/dt) for a state."""
    rho = state.rho.values
    if rho.min() <= 0.0:
        raise PositivityError(state.t, float(rho.min()))
    drho, du = _tendencies(state.grid, rho, state.u.values, params,
                           config.dealias, forcing, state.t)
    return ScalarField(state.grid, drho), VectorField(state.grid, du)


def cfl_dt(state: State, params, cfl_safety: float = 0.4) -> float:
    """Stable explicit step: advective and viscous restrictions combined."""
    g = state.grid
    rho = state.rho.values
    u = state.u.values
    umax = float(np.sqrt(u[0] ** 2 + u[1] ** 2 + u[2] ** 2).max())
    c_max = float(np.sqrt(params.gamma * rho ** (params.gamma - 1.0)).max())
    adv = g.dx / (umax + c_max)
    mu_eff = (params.mu + params.lam) / float(rho.min())
    visc = g.dx**2 / (6.0 * mu_eff)
    return cfl_safety * min(adv, visc)


def advective_dt(state: State, params, cfl_safety: float = 0.4) -> float:
    """Advective-only restriction (the IMEX scheme lifts the viscous one)."""
    g = state.grid
    rho = state.rho.values
    u = state.u.values
    umax = float(np.sqrt(u[0] ** 2 + u[1] ** 2 + u[2] ** 2).max())
    c_max = float(np.sqrt(params.gamma * rho ** (params.gamma - 1.0)).max())
    return cfl_safety * g.dx / (umax + c_max)


def _check_floor(t: float, rho: np.ndarray, floor: float):
    m = float(rho.min())
    if m <= floor or not np.isfinite(m):
        raise PositivityError(t, m)


def _step_rk4(grid: Grid, rho, u, t, dt, params, config, forcing):
    def f(r, v, tt):
        return _tendencies(grid, r, v, params, config.dealias, forcing, tt)

    k1r, k1u = f(rho, u, t)
    k2r, k2u = f(rho + 0.5 * dt * k1r, u + 0.5 * dt * k1u, t + 0.5 * dt)
    k3r, k3u = f(rho + 0.5 * dt * k2r, u + 0.5 * dt * k2u, t + 0.5 * dt)
    k4r, k4u = f(rho + dt * k3r, u + dt * k3u, t + dt)
    rho2 = rho + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    u2 = u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    return rho2, u2


_ARK_GAMMA = 1.0 - 1.0 / np.sqrt(2.0)
_ARK_DELTA = 1.0 - 1.0 / (2.0 * _ARK_GAMMA)


def _step_imex(grid: Grid, rho, u, t, dt, params, config, forcing):
    """Two-stage additive RK: shifted constant-coefficient diffusion implicit."""
    nu_i = params.mu / float(rho.min())
    lam_i = params.lam / float(rho.min())
    g1 = _ARK_GAMMA
    d1 = _ARK_DELTA

    def apply_L(uhat):
        out = np.stack([spectral.irfft(grid, -nu_i * grid.k_sq * uhat[i]) for i in range(3)])
        if lam_i != 0.0:
            divh = grid.ik[0] * uhat[0] + grid.ik[1] * uhat[1] + grid.ik[2] * uhat[2]
            out += lam_i * np.stack([spectral.irfft(grid, K * divh) for K in grid.ik])
        return out

    def solve(rhs_u, cdt):
        # (I - cdt * (nu_i Lap + lam_i grad div)) x = rhs, mode-diagonal after
        # splitting each mode into components along and transverse to xi
        rh = [spectral.rfft(grid, rhs_u[i]) for i in range(3)]
        if lam_i == 0.0:
            denom = 1.0 + cdt * nu_i * grid.k_sq
            return np.stack([spectral.irfft(grid, rh[i] / denom) for i in range(3)])
        denom_t = 1.0 + cdt * nu_i * grid.k_sq
        denom_l = 1.0 + cdt * (nu_i + lam_i) * grid.k_sq
        kdot = grid.ik[0] * rh[0] + grid.ik[1] * rh[1] + grid.ik[2] * rh[2]
        out = []
        for i, K in enumerate(grid.ik):
            longi = -K * kdot / grid.k_sq_safe
            trans = rh[i] - longi
            out.append(spectral.irfft(grid, trans / denom_t + longi / denom_l))
        return np.stack(out)

    # stage 1 tendencies at (rho, u)
    dr1, du1, uh = _tendencies(grid, rho, u, params, config.dealias, forcing, t,
                               want_uhat=True)
    n_u1 = du1 - apply_L(uh)

    rho_s = rho + dt * g1 * dr1
    _check_floor(t, rho_s, config.positivity_floor)
    u_s = solve(u + dt * g1 * n_u1, dt * g1)

    dr2, du2, uh_s = _tendencies(grid, rho_s, u_s, params, config.dealias, forcing,
                                 t + g1 * dt, want_uhat=True)
    Lu_s = apply_L(uh_s)
    n_u2 = du2 - Lu_s

    rho2 = rho + dt * (d1 * dr1 + (1.0 - d1) * dr2)
    u2 = solve(u + dt * (d1 * n_u1 + (1.0 - d1) * n_u2 + (1.0 - g1) * Lu_s), dt * g1)
    return rho2, u2


def step(state: State, dt: float, params, config: SolverConfig = SolverConfig(),
         forcing: Optional[Forcing] = None) -> State:
    """Advance one time step with the configured scheme."""
    grid = state.grid
    rho, u = state.rho.values, state.u.values
    _check_floor(state.t, rho, config.positivity_floor)
    if config.scheme == "explicit_rk4":
        rho2, u2 = _step_rk4(grid, rho, u, state.t, dt, params, config, forcing)
    else:
        rho2, u2 = _step_imex(grid, rho, u, state.t, dt, params, config, forcing)
    if not (np.isfinite(rho2).all() and np.isfinite(u2).all()):
        raise PositivityError(state.t + dt, float(np.nanmin(rho2)))
    _check_floor(state.t + dt, rho2, config.positivity_floor)
    return State(state.t + dt, ScalarField(grid, rho2), VectorField(grid, u2))


def stable_dt(state: State, params, config: SolverConfig) -> float:
    if config.scheme == "explicit_rk4":
        return cfl_dt(state, params, config.cfl_safety)
    return advective_dt(state, params, config.cfl_safety)


def run(initial: State, params, config: SolverConfig, sinks: Iterable = (),
        forcing: Optional[Forcing] = None) -> RunSummary:
    """Integrate to t_end, feeding sample states to the sinks.

    Each sink may define on_sample(state, step_index), on_checkpoint(state,
    step_index), and close(summary); samples are emitted every
    diagnostics_every steps (plus the initial and final states) and
    checkpoints every checkpoint_every steps. Partial output is flushed
    through close() even when the integration aborts.
    """
    summary = RunSummary(mass_initial=initial.mass())
    state = initial.copy()
    wall0 = _time.perf_counter()

    def note(st: State):
        summary.min_rho = min(summary.min_rho, float(st.rho.values.min()))
        summary.max_rho = max(summary.max_rho, float(st.rho.values.max()))

    def emit(kind: str, st: State, k: int):
        for s in sinks:
            fn = getattr(s, kind, None)
            if fn is not None:
                fn(st, k)

    note(state)
    emit("on_sample", state, 0)
    if config.checkpoint_every > 0:
        emit("on_checkpoint", state, 0)

    k = 0
    try:
        while state.t < config.t_end - 1e-14:
            dt = config.dt_init
            if config.adapt_dt:
                dt = min(dt, stable_dt(state, params, config))
            dt = min(dt, config.t_end - state.t)
            state = step(state, dt, params, config, forcing)
            k += 1
            note(state)
            last = state.t >= config.t_end - 1e-14
            if k % config.diagnostics_every == 0 or last:
                emit("on_sample", state, k)
            if config.checkpoint_every > 0 and (k % config.checkpoint_every == 0 or last):
                emit("on_checkpoint", state, k)
    except PositivityError as err:
        summary.aborted = True
        summary.abort_reason = str(err)
    finally:
        summary.steps = k
        summary.final_time = state.t
        summary.mass_final = state.mass()
        summary.wall_time = _time.perf_counter() - wall0
        for s in sinks:
            fn = getattr(s, "close", None)
            if fn is not None:
                fn(summary)
    return summary
