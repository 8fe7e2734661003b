"""Manufactured solutions with analytic forcing for convergence studies.

A prescribed (rho*, u*) pair is substituted into the governing equations
and the defect is added back as a forcing term, making (rho*, u*) an
exact solution of the forced system. Two flavors:

  band_limited   single-harmonic fields whose nonlinear products stay
                 inside the dealias ball, so the spatial discretization
                 is exact and the t = 0 residual and temporal errors
                 isolate the time integrator;
  full_spectrum  periodic Gaussian-type profiles exp(kappa * sum cos)
                 with analytically known derivatives and a full Fourier
                 tail, so refining the grid exposes the spatial error.

The velocity is a gradient field u* = s(t) grad psi(x) and the density
rho* = 1 + q(t) g(x), with every space derivative evaluated in closed
form; all forcing terms are pointwise formulas, independent of the
discrete operators.
"""

from __future__ import annotations

import numpy as np

from .fields import Grid, ScalarField, VectorField
from .solver import State


class ManufacturedSolution:
    def __init__(self, kind: str = "band_limited", amp_rho: float = 0.02,
                 amp_u: float = 0.05, kappa: float = 3.0, omega: float = 2.0):
        if kind not in ("band_limited", "full_spectrum"):
            raise ValueError(f"unknown manufactured kind {kind!r}")
        self.kind = kind
        self.amp_rho = amp_rho
        self.amp_u = amp_u
        self.kappa = kappa
        self.omega = omega

    # time envelopes
    def _q(self, t):
        return np.cos(self.omega * t)

    def _dq(self, t):
        return -self.omega * np.sin(self.omega * t)

    def _s(self, t):
        return np.sin(self.omega * t) + 0.5

    def _ds(self, t):
        return self.omega * np.cos(self.omega * t)

    # spatial profiles: g (density), psi (velocity potential) and derivatives
    def _profiles(self, grid: Grid):
        two_pi = 2.0 * np.pi / grid.length
        X, Y, Z = grid.x
        cx, cy, cz = np.cos(two_pi * X), np.cos(two_pi * Y), np.cos(two_pi * Z)
        sx, sy, sz = np.sin(two_pi * X), np.sin(two_pi * Y), np.sin(two_pi * Z)
        if self.kind == "band_limited":
            g = sx * cy * cz
            gx = two_pi * cx * cy * cz
            gy = -two_pi * sx * sy * cz
            gz = -two_pi * sx * cy * sz
            psi = cx * cy * cz
            psi_1 = [-two_pi * sx * cy * cz, -two_pi * cx * sy * cz, -two_pi * cx * cy * sz]
            lap_psi = -3.0 * two_pi**2 * psi
            grad_lap_psi = [-3.0 * two_pi**2 * p for p in psi_1]
        else:
            k = self.kappa
            e = np.exp(k * (cx + cy + cz) - 3.0 * k)
            g = e
            gx = -k * two_pi * sx * e
            gy = -k * two_pi * sy * e
            gz = -k * two_pi * sz * e
            psi = e
            psi_1 = [gx, gy, gz]
            lap_psi = (k * two_pi**2) * e * (
                -(cx + cy + cz) + k * (sx**2 + sy**2 + sz**2))
            # grad of lap: product rule on e * P with P the bracket above
            Px = two_pi * sx * (1.0 + 2.0 * k * cx)
            Py = two_pi * sy * (1.0 + 2.0 * k * cy)
            Pz = two_pi * sz * (1.0 + 2.0 * k * cz)
            P = -(cx + cy + cz) + k * (sx**2 + sy**2 + sz**2)
            grad_lap_psi = [
                (k * two_pi**2) * (gx * P + e * Px),
                (k * two_pi**2) * (gy * P + e * Py),
                (k * two_pi**2) * (gz * P + e * Pz),
            ]
        return g, (gx, gy, gz), psi_1, lap_psi, grad_lap_psi

    def state(self, grid: Grid, t: float) -> State:
        g, _, psi_1, _, _ = self._profiles(grid)
        rho = 1.0 + self.amp_rho * self._q(t) * g
        u = np.stack([self.amp_u * self._s(t) * p for p in psi_1])
        return State(t=float(t), rho=ScalarField(grid, rho), u=VectorField(grid, u))

    def time_derivative(self, grid: Grid, t: float):
        """Exact (d rho*/dt, d u*/dt) arrays at time t."""
        g, _, psi_1, _, _ = self._profiles(grid)
        drho = self.amp_rho * self._dq(t) * g
        du = np.stack([self.amp_u * self._ds(t) * p for p in psi_1])
        return drho, du

    def forcing(self, params):
        """Forcing callable (t, grid) -> (f_rho, f_u) for solver.run/rhs."""
        gamma, mu, lam = params.gamma, params.mu, params.lam

        def f(t: float, grid: Grid):
            prof, (px, py, pz), psi_1, lap_psi, grad_lap_psi = self._profiles(grid)
            q, dq = self._q(t), self._dq(t)
            s, ds = self._s(t), self._ds(t)
            rho = 1.0 + self.amp_rho * q * prof
            grad_rho = [self.amp_rho * q * c for c in (px, py, pz)]
            u = [self.amp_u * s * p for p in psi_1]
            du_dt = [self.amp_u * ds * p for p in psi_1]
            div_u = self.amp_u * s * lap_psi

            # mass defect: d_t rho + div(rho u)
            f_rho = self.amp_rho * dq * prof + rho * div_u + sum(
                u[i] * grad_rho[i] for i in range(3))

            # momentum defect: d_t u + (u.grad)u - (mu lap u + lam grad div u
            #                   - grad rho^gamma)/rho
            # u is a gradient field, so (u.grad)u = grad |u|^2 / 2
            f_u = np.empty((3,) + prof.shape)
            advect = self._advection(grid, s)
            for i in range(3):
                visc = (mu + lam) * self.amp_u * s * grad_lap_psi[i]  # lap u = grad div u here
                press = gamma * rho ** (gamma - 1.0) * grad_rho[i]
                f_u[i] = du_dt[i] + advect[i] - (visc - press) / rho
            return f_rho, f_u

        return f

    def _advection(self, grid: Grid, s: float):
        """(u . grad) u = grad |grad psi|^2 / 2 * (amp_u s)^2, in closed form."""
        two_pi = 2.0 * np.pi / grid.length
        X, Y, Z = grid.x
        cx, cy, cz = np.cos(two_pi * X), np.cos(two_pi * Y), np.cos(two_pi * Z)
        sx, sy, sz = np.sin(two_pi * X), np.sin(two_pi * Y), np.sin(two_pi * Z)
        c2 = (self.amp_u * s) ** 2
        if self.kind == "band_limited":
            # |grad psi|^2 with psi = cx cy cz
            m2 = two_pi**2 * ((sx * cy * cz) ** 2 + (cx * sy * cz) ** 2 + (cx * cy * sz) ** 2)
            # gradient of m2 via product rule
            gx = two_pi**3 * (2 * sx * cx * (cy * cz) ** 2
                              - 2 * cx * sx * ((sy * cz) ** 2 + (cy * sz) ** 2))
            gy = two_pi**3 * (2 * sy * cy * (cx * cz) ** 2
                              - 2 * cy * sy * ((sx * cz) ** 2 + (cx * sz) ** 2))
            gz = two_pi**3 * (2 * sz * cz * (cx * cy) ** 2
                              - 2 * cz * sz * ((sx * cy) ** 2 + (cx * sy) ** 2))
            return [0.5 * c2 * gx, 0.5 * c2 * gy, 0.5 * c2 * gz]
        k = self.kappa
        e2 = np.exp(2.0 * k * (cx + cy + cz) - 6.0 * k)
        s2sum = sx**2 + sy**2 + sz**2
        # m2 = (k two_pi)^2 e^2 (sx^2+sy^2+sz^2); grad by product rule
        pref = (k * two_pi) ** 2
        gx = pref * e2 * (-2.0 * k * two_pi * sx * s2sum + two_pi * 2.0 * sx * cx)
        gy = pref * e2 * (-2.0 * k * two_pi * sy * s2sum + two_pi * 2.0 * sy * cy)
        gz = pref * e2 * (-2.0 * k * two_pi * sz * s2sum + two_pi * 2.0 * sz * cz)
        return [0.5 * c2 * gx, 0.5 * c2 * gy, 0.5 * c2 * gz]

    def error(self, state: State) -> float:
        """Max-norm error of a computed state against the exact fields."""
        exact = self.state(state.grid, state.t)
        e = abs(state.rho.values - exact.rho.values).max()
        e = max(e, abs(state.u.values - exact.u.values).max())
        return float(e)
