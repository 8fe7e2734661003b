"""Flow-map particle tracking, the trajectory density formula, the
quadratic collapse model, and the dyadic amplitude envelope.

Particles follow dX/dt = u(t, X) with RK4 in time; velocity between the
two bracketing snapshots is interpolated linearly in t, and values at
off-grid points are evaluated from the trigonometric interpolant
(separable mode sums), so spatial interpolation is spectrally exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .fields import Grid
from .solver import State

AMPLITUDE_PLATEAU = 4.0e4


# ---------------------------------------------------------------------------
# spectral sampling at arbitrary points
# ---------------------------------------------------------------------------

def _phase_factors(grid: Grid, pts: np.ndarray):
    """Per-axis complex phases e^(i xi x0) for each point (full spectrum)."""
    k1 = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
    kz = np.arange(grid.n // 2 + 1, dtype=float)
    scale = 2.0 * np.pi / grid.length
    ex = np.exp(1j * scale * np.outer(pts[:, 0], k1))
    ey = np.exp(1j * scale * np.outer(pts[:, 1], k1))
    ez = np.exp(1j * scale * np.outer(pts[:, 2], kz))
    return ex, ey, ez


def sample_at(grid: Grid, values: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Evaluate field(s) at arbitrary points via the trigonometric interpolant.

    values: (n,n,n) or (m,n,n,n); pts: (p,3). Returns (p,) or (m,p).
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float)) % grid.length
    ex, ey, ez = _phase_factors(grid, pts)
    comps = values if values.ndim == 4 else values[None]
    out = np.empty((comps.shape[0], pts.shape[0]))
    wts = grid.spectral_weights
    for m, c in enumerate(comps):
        ch = spectral.coefficients(grid, c) * wts  # doubled conjugate modes
        t1 = np.einsum("ijk,pk->pij", ch, ez)
        t2 = np.einsum("pij,pj->pi", t1, ey)
        vals = np.einsum("pi,pi->p", t2, ex)
        out[m] = vals.real
    return out if values.ndim == 4 else out[0]


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Samples of one particle path with interpolated flow quantities."""

    seed: np.ndarray
    tau: float
    t: list[float] = field(default_factory=list)
    x: list[np.ndarray] = field(default_factory=list)
    rho: list[float] = field(default_factory=list)
    a: list[float] = field(default_factory=list)
    F: list[float] = field(default_factory=list)

    def as_arrays(self):
        return (np.array(self.t), np.array(self.x),
                np.array(self.rho), np.array(self.a), np.array(self.F))

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,x,y,z,rho,a,F\n")
            for k in range(len(self.t)):
                row = [self.t[k], *self.x[k], self.rho[k], self.a[k], self.F[k]]
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


class ParticleTracker:
    """Streams states from a run and advances seed particles between them.

    RK4 substeps span each snapshot gap, with the velocity interpolated
    linearly in time between the bracketing snapshots. Interpolated
    density, pressure amplitude, and effective viscous flux are recorded
    at every snapshot time.
    """

    def __init__(self, seeds: np.ndarray, params, tau: float = 0.0, substeps: int = 1):
        seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
        if seeds.shape[1] != 3:
            raise ValueError("seeds must be (p, 3) positions")
        if substeps < 1:
            raise ValueError("substeps must be >= 1")
        self.params = params
        self.tau = tau
        self.substeps = substeps
        self.trajectories = [Trajectory(seed=s.copy(), tau=tau) for s in seeds]
        self._pos = seeds.copy()
        self._prev: State | None = None
        self._released = False

    def _record(self, state: State):
        g = state.grid
        rho_i = sample_at(g, state.rho.values, self._pos)
        a_field = state.rho.values**self.params.gamma - 1.0
        div_u = spectral.div_arr(g, state.u.values)
        F_field = div_u - a_field / self.params.nu
        a_i = sample_at(g, a_field, self._pos)
        F_i = sample_at(g, F_field, self._pos)
        for k, tr in enumerate(self.trajectories):
            tr.t.append(state.t)
            tr.x.append(self._pos[k].copy())
            tr.rho.append(float(rho_i[k]))
            tr.a.append(float(a_i[k]))
            tr.F.append(float(F_i[k]))

    def on_sample(self, state: State, step_index: int):
        if state.t < self.tau - 1e-14:
            self._prev = state.copy()
            return
        if not self._released:
            # release at the first snapshot at or past tau; out-of-box seeds wrap
            self._released = True
            self._pos = self._pos % state.grid.length
            self._prev = state.copy()
            self._record(state)
            return
        prev = self._prev
        g = state.grid
        t0, t1 = prev.t, state.t
        if t1 <= t0:
            return
        u0, u1 = prev.u.values, state.u.values

        def vel(t, pts):
            w = (t - t0) / (t1 - t0)
            return sample_at(g, (1.0 - w) * u0 + w * u1, pts).T

        h = (t1 - t0) / self.substeps
        x = self._pos
        t = t0
        for _ in range(self.substeps):
            k1 = vel(t, x)
            k2 = vel(t + 0.5 * h, x + 0.5 * h * k1)
            k3 = vel(t + 0.5 * h, x + 0.5 * h * k2)
            k4 = vel(t + h, x + h * k3)
            x = (x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)) % g.length
            t += h
        self._pos = x
        self._prev = state.copy()
        self._record(state)

    def close(self, summary=None):
        pass


def advect(seeds: np.ndarray, tau: float, snapshots: list[State], params,
           substeps: int = 1) -> list[Trajectory]:
    """Track seed particles through an in-memory, time-ordered snapshot list."""
    if not snapshots:
        raise ValueError("advect needs at least one snapshot")
    ts = [s.t for s in snapshots]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("snapshots must be strictly time-ordered")
    if tau < ts[0] - 1e-14 or tau > ts[-1] + 1e-14:
        raise ValueError(f"release time {tau} outside snapshot range [{ts[0]}, {ts[-1]}]")
    tracker = ParticleTracker(seeds, params, tau=tau, substeps=substeps)
    for s in snapshots:
        tracker.on_sample(s, 0)
    return tracker.trajectories


def density_formula_residual(traj: Trajectory) -> float:
    """Worst relative mismatch of the exponential density representation.

    Along a path, log rho(t) - log rho(t1) must equal minus the integral
    of a + F; the integral is taken by the trapezoid rule over the sample
    times, and the mismatch is maximized over all sample windows.
    """
    t, _, rho, a, F = traj.as_arrays()
    if len(t) < 2:
        return 0.0
    integrand = a + F
    cumulative = np.concatenate([[0.0], np.cumsum(
        0.5 * (integrand[1:] + integrand[:-1]) * np.diff(t))])
    log_err = np.log(rho) + cumulative
    return float(np.abs(log_err[None, :] - log_err[:, None]).max())


# ---------------------------------------------------------------------------
# collapse model and amplitude envelope
# ---------------------------------------------------------------------------

def toy_model(delta: float, alpha: float, gamma: float, t) -> np.ndarray | float:
    """Closed form (delta^alpha + gamma t)^-1 of df/dt = -gamma f^2,
    f(0) = delta^-alpha."""
    t = np.asarray(t, dtype=float)
    if (t < 0).any():
        raise ValueError("toy_model needs t >= 0")
    out = 1.0 / (delta**alpha + gamma * t)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EnvelopeSchedule:
    """Dyadic collapse schedule and the derived time thresholds.

    Outside the deep-amplitude regime (N0 < 15) the interval list is
    empty, T0 = 0, and in_regime is False; the thresholds T1/T2 are still
    computed from their defining formulas.
    """

    delta: float
    alpha: float
    gamma: float
    epsilon: float
    n0: int
    t_js: tuple[float, ...]
    T0: float
    T1: float
    T2: float
    beta: float
    in_regime: bool

    @property
    def interval_count(self) -> int:
        return len(self.t_js)

    def interval_edges(self) -> np.ndarray:
        return np.concatenate([[0.0], np.array(self.t_js)])


def envelope_schedule(delta: float, alpha: float, gamma: float,
                      epsilon: float = 0.1) -> EnvelopeSchedule:
    if not (0.0 < delta <= 1.0):
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if not (alpha > 0 and gamma >= 1.0 and epsilon > 0):
        raise ValueError("need alpha > 0, gamma >= 1, epsilon > 0")
    amp = delta ** (-alpha)
    n0 = int(math.floor(math.log2(amp)))
    in_regime = n0 >= 15
    count = max(n0 - 14, 0)
    t_js = []
    acc = 0.0
    for j in range(1, count + 1):
        acc += (7.0 / (8.0 * gamma)) * 2.0 ** (-(n0 + 1 - j))
        t_js.append(acc)
    T0 = t_js[-1] if t_js else 0.0
    small = epsilon * delta ** (1.0 - 0.75 * alpha)
    T1 = 2.0 / gamma * math.log(1.0 / small)
    T2 = small ** (-2.0)
    beta = 1.0 - 0.75 * alpha * (1.0 + 1.0 / gamma)
    return EnvelopeSchedule(delta, alpha, gamma, epsilon, n0, tuple(t_js),
                            T0, T1, T2, beta, in_regime)


def envelope_value(schedule: EnvelopeSchedule, t: float) -> float:
    """Piecewise amplitude bound: reciprocal decay on each dyadic interval
    (right-continuous on [t_{j-1}, t_j)), constant plateau for t >= T0."""
    if t < 0:
        raise ValueError("envelope_value needs t >= 0")
    if t >= schedule.T0 or schedule.interval_count == 0:
        return AMPLITUDE_PLATEAU
    edges = schedule.interval_edges()
    j = int(np.searchsorted(edges, t, side="right"))  # interval [edges[j-1], edges[j])
    gamma, n0 = schedule.gamma, schedule.n0
    base = 0.25 / (1.0 + 2.0 ** (n0 + 1 - j))
    return 1.0 / (base + gamma * (t - edges[j - 1]))


def envelope_regime(schedule: EnvelopeSchedule, t: float) -> str:
    if t < schedule.T0:
        return "collapse"
    if t < schedule.T1:
        return "plateau"
    return "small"


def envelope_l1(schedule: EnvelopeSchedule, samples_per_interval: int = 4096) -> float:
    """Numerical quadrature of the piecewise bound over [0, T0]."""
    total = 0.0
    edges = schedule.interval_edges()
    for j in range(1, len(edges)):
        tt = np.linspace(edges[j - 1], edges[j], samples_per_interval)
        tt = np.minimum(tt, np.nextafter(edges[j], edges[j - 1]))
        vv = np.array([envelope_value(schedule, t) for t in tt])
        total += float(np.trapezoid(vv, tt))
    return total


def envelope_interval_budgets(schedule: EnvelopeSchedule) -> np.ndarray:
    """Exact per-interval integrals gamma^-1 log(1 + gamma Dt_j / base_j)."""
    gamma, n0 = schedule.gamma, schedule.n0
    out = []
    edges = schedule.interval_edges()
    for j in range(1, len(edges)):
        base = 0.25 / (1.0 + 2.0 ** (n0 + 1 - j))
        dt = edges[j] - edges[j - 1]
        out.append(math.log(1.0 + gamma * dt / base) / gamma)
    return np.array(out)
