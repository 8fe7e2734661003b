"""Monitored functionals, identities, and inequality checks on snapshots.

Everything here is a pure function of an immutable state. The CSV writer
streams one row per sample with a fixed, documented column order; the
energy-balance residual column needs both neighbors of a sample, so rows
are flushed one sample behind the integration (first and last rows carry
nan there).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import spectral
from .dyadic import DyadicBank, besov_norm
from .fields import Grid, ScalarField, VectorField
from .solver import State

_GL_NODES, _GL_WEIGHTS = leggauss(64)
_GL_T = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


def h_direct(rho: np.ndarray, gamma: float) -> np.ndarray:
    """Pointwise relative entropy against the far-field density 1."""
    rho = np.asarray(rho, dtype=float)
    if gamma == 1.0:
        return rho * np.log(rho) - (rho - 1.0)
    return ((rho**gamma - 1.0) - gamma * (rho - 1.0)) / (gamma - 1.0)


def h_quadrature(rho: np.ndarray, gamma: float) -> np.ndarray:
    """Taylor-remainder form gamma*(rho-1)^2 * int_0^1 (1-s)[s rho + 1-s]^(gamma-2) ds,
    evaluated with 64-point Gauss-Legendre."""
    rho = np.asarray(rho, dtype=float)[..., None]
    base = _GL_T * rho + (1.0 - _GL_T)
    integ = np.sum(_GL_W * (1.0 - _GL_T) * base ** (gamma - 2.0), axis=-1)
    return gamma * integ * (rho[..., 0] - 1.0) ** 2


def potential_energy(state: State, gamma: float) -> float:
    rho = state.rho.values
    if rho.min() <= 0.0:
        raise ValueError("potential energy needs positive density")
    return float(h_direct(rho, gamma).sum() * state.grid.cell_volume)


def effective_flux(state: State, params) -> ScalarField:
    """div u - (rho^gamma - 1)/nu with nu the combined viscosity."""
    g = state.grid
    a = state.rho.values**params.gamma - 1.0
    div_u = spectral.div_arr(g, state.u.values)
    return ScalarField(g, div_u - a / params.nu)


def material_derivative(state: State, params) -> VectorField:
    """Acceleration following the flow, from the momentum balance."""
    g = state.grid
    rho = state.rho.values
    if rho.min() <= 0.0:
        raise ValueError("material derivative needs positive density")
    u = state.u.values
    a = rho**params.gamma - 1.0
    ah = spectral.rfft(g, a)
    grad_a = np.stack([spectral.irfft(g, K * ah) for K in g.ik])
    visc = params.mu * spectral.laplacian_arr(g, u)
    if params.lam != 0.0:
        visc += params.lam * spectral.grad_arr(g, spectral.div_arr(g, u))
    return VectorField(g, (visc - grad_a) / rho)


def elliptic_identity_residual(state: State, params) -> tuple[float, float]:
    """Relative L2 residuals of the two second-order identities linking the
    effective viscous flux and the rotation to div/curl of rho * udot."""
    g = state.grid
    udot = material_derivative(state, params).values
    rho_udot = state.rho.values * udot
    F = effective_flux(state, params).values
    curl_u = spectral.curl_arr(g, state.u.values)

    div_r = spectral.div_arr(g, rho_udot)
    lap_F = params.nu * spectral.laplacian_arr(g, F)
    den_f = spectral.l2_norm_sq_arr(g, div_r) ** 0.5
    res_f = spectral.l2_norm_sq_arr(g, lap_F - div_r) ** 0.5 / max(den_f, 1e-300)

    curl_r = spectral.curl_arr(g, rho_udot)
    lap_c = params.mu * spectral.laplacian_arr(g, curl_u)
    den_c = spectral.l2_norm_sq_arr(g, curl_r) ** 0.5
    res_c = spectral.l2_norm_sq_arr(g, lap_c - curl_r) ** 0.5 / max(den_c, 1e-300)
    return float(res_f), float(res_c)


def energies(state: State, params, c1: float = 1.0) -> tuple[float, float, float, float]:
    """Lower-order energy pair (E1, E2) and the combined (E, D).

    E1 = gamma ||sqrt(rho) u||^2 + gamma H + 1/2 ||curl u||^2 + 1/2 ||F||^2
    E2 = ||sqrt(rho) udot||^2 + gamma ||div u||^2 + 12 ||a||_L6^2
    E  = E1 + E2 / (4 c1)
    D  = gamma/4 ||grad u||^2 + 1/4 ||sqrt(rho) udot||^2
         + (||grad udot||^2 + ||a||_L6^2) / (4 c1)
    """
    if not (c1 > 0):
        raise ValueError("c1 must be positive")
    g = state.grid
    rho = state.rho.values
    u = state.u.values
    gamma = params.gamma
    a = rho**gamma - 1.0

    sq_rho_u = float(np.sum(rho * (u[0] ** 2 + u[1] ** 2 + u[2] ** 2)) * g.cell_volume)
    H = potential_energy(state, gamma)
    curl_u = spectral.curl_arr(g, u)
    F = effective_flux(state, params).values
    e1 = gamma * sq_rho_u + gamma * H \
        + 0.5 * spectral.l2_norm_sq_arr(g, curl_u) + 0.5 * spectral.l2_norm_sq_arr(g, F)

    udot = material_derivative(state, params).values
    sq_rho_udot = float(np.sum(rho * (udot[0] ** 2 + udot[1] ** 2 + udot[2] ** 2)) * g.cell_volume)
    div_u = spectral.div_arr(g, u)
    a6_sq = spectral.lp_norm_arr(g, a, 6.0) ** 2
    e2 = sq_rho_udot + gamma * spectral.l2_norm_sq_arr(g, div_u) + 12.0 * a6_sq

    e = e1 + e2 / (4.0 * c1)
    d = 0.25 * gamma * spectral.grad_norm_sq_arr(g, u) + 0.25 * sq_rho_udot \
        + (spectral.grad_norm_sq_arr(g, udot) + a6_sq) / (4.0 * c1)
    return float(e1), float(e2), float(e), float(d)


def japanese_bracket(t: float) -> float:
    return math.sqrt(1.0 + t * t)


def freq_split_low(state: State, r: float, gamma: float) -> float:
    """Low-mode share of gamma |rho-1|^2 + |rho u|^2 over |xi| <= r <t>^(-1/2),
    in the Parseval-consistent normalization (r -> inf recovers the full
    squared L2 norms)."""
    if not (r > 0):
        raise ValueError("freq_split_low needs r > 0")
    g = state.grid
    cutoff = r / japanese_bracket(state.t) ** 0.5
    sel = g.k_mag <= cutoff
    if not sel.any():
        return 0.0
    w = g.spectral_weights
    varrho_h = spectral.coefficients(g, state.rho.values - 1.0)
    total = gamma * np.sum(w[sel] * np.abs(varrho_h[sel]) ** 2)
    for i in range(3):
        mh = spectral.coefficients(g, state.rho.values * state.u.values[i])
        total += np.sum(w[sel] * np.abs(mh[sel]) ** 2)
    return float(total * g.length**3)


@dataclass
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    hard: bool

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def satisfied(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-300


def inequality_monitor(state: State, params, q: float = 10.0 / 3.0) -> list[InequalityCheck]:
    """Evaluate the monitored inequalities on one snapshot.

    The interpolation bound ||a||_p^p <= 4 gamma R^(p-1) H + R^(p-6) ||a||_L6^6
    carries explicit constants and holds pointwise under grid quadrature,
    so it is asserted hard for R in {2, 4, 2 delta^-alpha} and p in {2, 3}.
    Estimates with unspecified universal constants are reported as ratios
    (rhs evaluated with constant 1) and never asserted.
    """
    g = state.grid
    rho = state.rho.values
    if rho.min() <= 0.0:
        raise ValueError("inequality monitor needs positive density")
    gamma = params.gamma
    a = rho**gamma - 1.0
    H = potential_energy(state, gamma)
    a6_p6 = spectral.lp_norm_arr(g, a, 6.0) ** 6

    checks = []
    for R in (2.0, 4.0, 2.0 * params.delta ** (-params.alpha)):
        for p in (2.0, 3.0):
            lhs = spectral.lp_norm_arr(g, a, p) ** p
            rhs = 4.0 * gamma * R ** (p - 1.0) * H + R ** (p - 6.0) * a6_p6
            checks.append(InequalityCheck(f"a_interp_R{R:g}_p{p:g}", lhs, rhs, hard=True))

    # gradient bound through rotation/flux/amplitude split (constant-free)
    u = state.u.values
    F = effective_flux(state, params).values
    curl_u = spectral.curl_arr(g, u)
    for p in (2.0, 3.0):
        lhs = spectral.lp_norm_arr(g, _grad_tensor(g, u), p)
        rhs = (spectral.lp_norm_arr(g, curl_u, p) + spectral.lp_norm_arr(g, F, p)
               + spectral.lp_norm_arr(g, a, p))
        checks.append(InequalityCheck(f"grad_u_split_p{p:g}", lhs, rhs, hard=False))

    # log-interpolation bound for the Lipschitz norm (constant-free)
    div_u = spectral.div_arr(g, u)
    frak_h = spectral.lp_norm_arr(g, curl_u, np.inf) + spectral.lp_norm_arr(g, div_u, np.inf)
    gu = _grad_tensor(g, u)
    lhs = spectral.lp_norm_arr(g, gu, np.inf)
    grad2 = np.concatenate([_grad_tensor(g, gu[3 * i:3 * i + 3]) for i in range(3)])
    gq = spectral.lp_norm_arr(g, grad2, q)
    if frak_h > 0:
        rhs = (spectral.l2_norm_sq_arr(g, gu) ** 0.5
               + q / (q - 3.0) * frak_h * math.log2(2.0 + gq / frak_h))
    else:
        rhs = spectral.l2_norm_sq_arr(g, gu) ** 0.5
    checks.append(InequalityCheck("lipschitz_log_interp", lhs, rhs, hard=False))
    return checks


def _grad_tensor(grid: Grid, v: np.ndarray) -> np.ndarray:
    """All first derivatives of the components of v, stacked (9 or 3n comps)."""
    comps = v if v.ndim == 4 else v[None]
    rows = []
    for c in comps:
        ch = spectral.rfft(grid, c)
        for K in grid.ik:
            rows.append(spectral.irfft(grid, K * ch))
    return np.stack(rows)


def grad_a_evolution_residual(states: list[State], params, p: float = 2.0) -> list[float]:
    """Residual of the transport equation satisfied by grad(rho^gamma - 1).

    Uses centered time differences over consecutive snapshot triples and
    spectral space derivatives, so the residual is O(dt^2) + O(spectral).
    Returns one relative residual per interior snapshot.
    """
    if len(states) < 3:
        raise ValueError("need at least 3 consecutive snapshots")
    gamma = params.gamma
    g = states[0].grid

    def grad_a_of(st: State) -> np.ndarray:
        a = st.rho.values**gamma - 1.0
        ah = spectral.rfft(g, a)
        return np.stack([spectral.irfft(g, K * ah) for K in g.ik])

    out = []
    for k in range(1, len(states) - 1):
        st = states[k]
        ga_prev = grad_a_of(states[k - 1])
        ga_next = grad_a_of(states[k + 1])
        ga = grad_a_of(st)
        dt2 = states[k + 1].t - states[k - 1].t
        ddt = (ga_next - ga_prev) / dt2

        u = st.u.values
        F = effective_flux(st, params).values
        div_u = spectral.div_arr(g, u)
        a = st.rho.values**gamma - 1.0
        Fh = spectral.rfft(g, F)
        grad_F = np.stack([spectral.irfft(g, K * Fh) for K in g.ik])
        dvh = spectral.rfft(g, div_u)
        grad_div = np.stack([spectral.irfft(g, K * dvh) for K in g.ik])

        resid = np.empty_like(ga)
        for i in range(3):
            gih = spectral.rfft(g, ga[i])
            adv = sum(u[j] * spectral.irfft(g, g.ik[j] * gih) for j in range(3))
            gut = sum(spectral.irfft(g, g.ik[i] * spectral.rfft(g, u[j])) * ga[j]
                      for j in range(3))
            resid[i] = (ddt[i] + adv + gamma / params.nu * ga[i]
                        + gamma * grad_F[i] + gamma * ga[i] * div_u
                        + gamma * a * grad_div[i] + gut)
        den = max(spectral.lp_norm_arr(g, ga, p), 1e-300)
        out.append(spectral.lp_norm_arr(g, resid, p) / den)
    return out


# ---------------------------------------------------------------------------
# per-sample record and CSV streaming
# ---------------------------------------------------------------------------

@dataclass
class DiagnosticsOptions:
    c1: float = 1.0
    q_grad_a: float = 10.0 / 3.0
    r_freq_split: float = 2.0
    besov: bool = True


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    H_rho: float
    E1: float
    E2: float
    E: float
    D: float
    L2_sq_rho_u: float
    Linf_a: float
    L1_a: float
    L2_a: float
    L6_a: float
    L3_a: float
    L2_F: float
    Linf_F: float
    L2_curl_u: float
    L2_div_u: float
    L2_grad_u: float
    L2_rho_udot: float
    L2_grad_udot: float
    min_rho: float
    max_rho: float
    Lq_grad_a: float
    besov_u_B12_21: float
    besov_rho_B34_41: float
    freq_split_low: float
    elliptic_residual: float
    energy_balance_residual: float
    ineq_margins: list[InequalityCheck]

    def scalar_columns(self) -> list[str]:
        cols = [f.name for f in dc_fields(self) if f.name != "ineq_margins"]
        for chk in self.ineq_margins:
            cols += [f"ineq_{chk.name}_lhs", f"ineq_{chk.name}_rhs", f"ineq_{chk.name}_margin"]
        return cols

    def scalar_values(self) -> list[float]:
        vals = [getattr(self, f.name) for f in dc_fields(self) if f.name != "ineq_margins"]
        for chk in self.ineq_margins:
            vals += [chk.lhs, chk.rhs, chk.margin]
        return vals


def compute_record(state: State, params,
                   options: DiagnosticsOptions = DiagnosticsOptions(),
                   bank: Optional[DyadicBank] = None) -> DiagnosticsRecord:
    g = state.grid
    rho = state.rho.values
    u = state.u.values
    gamma = params.gamma
    a = rho**gamma - 1.0
    norm = spectral.lp_norm_arr

    e1, e2, e, d = energies(state, params, options.c1)
    F = effective_flux(state, params).values
    curl_u = spectral.curl_arr(g, u)
    div_u = spectral.div_arr(g, u)
    udot = material_derivative(state, params).values
    ah = spectral.rfft(g, a)
    grad_a = np.stack([spectral.irfft(g, K * ah) for K in g.ik])
    res_f, res_c = elliptic_identity_residual(state, params)

    if options.besov:
        bank = bank or DyadicBank.for_grid(g)
        bes_u = besov_norm(VectorField(g, u), 0.5, 2.0, 1.0, bank)
        bes_rho = besov_norm(ScalarField(g, rho - 1.0), 0.75, 4.0, 1.0, bank)
    else:
        bes_u = bes_rho = float("nan")

    return DiagnosticsRecord(
        t=state.t,
        mass=state.mass(),
        H_rho=potential_energy(state, gamma),
        E1=e1, E2=e2, E=e, D=d,
        L2_sq_rho_u=float(np.sum(rho * (u[0] ** 2 + u[1] ** 2 + u[2] ** 2)) * g.cell_volume),
        Linf_a=norm(g, a, np.inf),
        L1_a=norm(g, a, 1.0),
        L2_a=norm(g, a, 2.0),
        L6_a=norm(g, a, 6.0),
        L3_a=norm(g, a, 3.0),
        L2_F=norm(g, F, 2.0),
        Linf_F=norm(g, F, np.inf),
        L2_curl_u=norm(g, curl_u, 2.0),
        L2_div_u=norm(g, div_u, 2.0),
        L2_grad_u=spectral.grad_norm_sq_arr(g, u) ** 0.5,
        L2_rho_udot=float(np.sqrt(np.sum(rho * (udot[0] ** 2 + udot[1] ** 2 + udot[2] ** 2))
                                  * g.cell_volume)),
        L2_grad_udot=spectral.grad_norm_sq_arr(g, udot) ** 0.5,
        min_rho=float(rho.min()),
        max_rho=float(rho.max()),
        Lq_grad_a=norm(g, grad_a, options.q_grad_a),
        besov_u_B12_21=bes_u,
        besov_rho_B34_41=bes_rho,
        freq_split_low=freq_split_low(state, options.r_freq_split, gamma),
        elliptic_residual=max(res_f, res_c),
        energy_balance_residual=float("nan"),
        ineq_margins=inequality_monitor(state, params, options.q_grad_a),
    )


def energy_balance_residuals(records: list[DiagnosticsRecord], params) -> np.ndarray:
    """Centered residual of d/dt(kinetic + potential) + dissipation at the
    interior samples; endpoints get nan."""
    ts = np.array([r.t for r in records])
    total = np.array([0.5 * r.L2_sq_rho_u + r.H_rho for r in records])
    diss = np.array([params.mu * r.L2_grad_u**2 + params.lam * r.L2_div_u**2 for r in records])
    out = np.full(len(records), np.nan)
    if len(records) >= 3:
        out[1:-1] = (total[2:] - total[:-2]) / (ts[2:] - ts[:-2]) + diss[1:-1]
    return out


class DiagnosticsCSVWriter:
    """Streams records to CSV; binary64 values with 17 significant digits.

    Holds two records back so the centered energy-balance residual of a
    sample can be filled in once its successor arrives.
    """

    def __init__(self, path, params, options: DiagnosticsOptions = DiagnosticsOptions()):
        self.path = Path(path)
        self.params = params
        self.options = options
        self._pending: list[DiagnosticsRecord] = []
        self._fh = None
        self._bank = None
        self.records: list[DiagnosticsRecord] = []

    def on_sample(self, state: State, step_index: int):
        if self._bank is None and self.options.besov:
            self._bank = DyadicBank.for_grid(state.grid)
        rec = compute_record(state, self.params, self.options, self._bank)
        self.records.append(rec)
        self._pending.append(rec)
        if len(self._pending) == 3:
            self._pending[1].energy_balance_residual = float(
                energy_balance_residuals(self._pending, self.params)[1])
            self._write(self._pending.pop(0))

    def _write(self, rec: DiagnosticsRecord):
        if self._fh is None:
            self._fh = open(self.path, "w")
            self._fh.write(",".join(rec.scalar_columns()) + "\n")
        self._fh.write(",".join(f"{v:.17g}" for v in rec.scalar_values()) + "\n")
        self._fh.flush()

    def close(self, summary=None):
        for rec in self._pending:
            self._write(rec)
        self._pending.clear()
        if self._fh is not None:
            self._fh.close()
            self._fh = None
