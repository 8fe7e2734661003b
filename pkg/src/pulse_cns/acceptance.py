"""Self-contained verification suite.

Every check regenerates its own fixtures (no network, no external data)
and returns a CheckResult; the CLI `verify` subcommand and the pytest
acceptance module both execute these. Quantitative tolerances follow the
project acceptance contract and are frozen here, not calibrated at run
time.

The expensive fixtures (the reference pulse run and its half-step twin,
the collapse-regime run) are built once per process and memoized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .diagnostics import (
    DiagnosticsOptions,
    compute_record,
    effective_flux,
    elliptic_identity_residual,
    energy_balance_residuals,
    h_direct,
    h_quadrature,
    material_derivative,
)
from .dyadic import DyadicBank, dyadic_project, low_block, projection_kernel_l1
from .fields import Grid, ScalarField
from .harness import fit_decay
from .lagrangian import (
    ParticleTracker,
    density_formula_residual,
    envelope_interval_budgets,
    envelope_l1,
    envelope_schedule,
    toy_model,
)
from .manufactured import ManufacturedSolution
from .pulse import PulseParams, build_pulse
from .samples import random_state
from .solver import SolverConfig, State, run


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


class _RecordingSink:
    def __init__(self, params, options: DiagnosticsOptions):
        self.params = params
        self.options = options
        self.records = []
        self._bank = None

    def on_sample(self, state: State, step_index: int):
        if self._bank is None and self.options.besov:
            self._bank = DyadicBank.for_grid(state.grid)
        self.records.append(compute_record(state, self.params, self.options, self._bank))


def _benchmark_seeds(grid: Grid, delta: float) -> np.ndarray:
    """16 seed particles on shells of the pulse (4 radii x 4 directions)."""
    c = grid.length / 2.0
    dirs = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dtype=float)
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    radii = np.array([0.5, 1.0, 1.5, 2.0]) * delta
    return np.array([c + r * d for r in radii for d in dirs])


@dataclass
class BenchmarkArtifacts:
    params: PulseParams
    records: list
    summary: object
    trackers: list
    fine_records: list | None = None


class FixtureCache:
    """Lazy, memoized expensive runs shared across checks."""

    def __init__(self, n: int = 64):
        self.n = n
        self._bench: BenchmarkArtifacts | None = None
        self._collapse: tuple | None = None

    # reference pulse run: delta=1/8, alpha=1/2, gamma=1, prepared data
    BENCH_DT = 1.0e-3
    BENCH_T_END = 0.5
    FINE_T_END = 0.15

    def benchmark(self) -> BenchmarkArtifacts:
        if self._bench is None:
            grid = Grid(self.n, 1.0)
            params = PulseParams(delta=0.125, alpha=0.5, gamma=1.0, mu=1.0,
                                 lam=0.0, v_amp=0.0)
            options = DiagnosticsOptions()
            initial = build_pulse(params, grid)
            sink = _RecordingSink(params, options)
            tracker = ParticleTracker(_benchmark_seeds(grid, params.delta), params)
            cfg = SolverConfig(dt_init=self.BENCH_DT, t_end=self.BENCH_T_END,
                               scheme="imex", diagnostics_every=1)
            summary = run(initial, params, cfg, sinks=[sink, tracker])

            fine_sink = _RecordingSink(params, DiagnosticsOptions(besov=False))
            fine_cfg = SolverConfig(dt_init=self.BENCH_DT / 2.0, t_end=self.FINE_T_END,
                                    scheme="imex", diagnostics_every=1)
            run(build_pulse(params, grid), params, fine_cfg, sinks=[fine_sink])
            self._bench = BenchmarkArtifacts(params, sink.records, summary,
                                             tracker.trajectories, fine_sink.records)
        return self._bench

    # collapse-regime run: amplitude 64 member with halved potential component
    def collapse(self):
        if self._collapse is None:
            grid = Grid(self.n, 1.0)
            params = PulseParams(delta=0.125, alpha=2.0, gamma=1.0, mu=1.0,
                                 lam=0.0, v_amp=0.0, grad_amp=0.5)
            sink = _RecordingSink(params, DiagnosticsOptions(besov=False))
            cfg = SolverConfig(dt_init=5.0e-4, t_end=0.12, scheme="imex",
                               diagnostics_every=1, adapt_dt=True, cfl_safety=0.4)
            summary = run(build_pulse(params, grid), params, cfg, sinks=[sink])
            self._collapse = (params, sink.records, summary)
        return self._collapse


# ---------------------------------------------------------------------------
# individual criteria
# ---------------------------------------------------------------------------

def check_identity_suite(cache: FixtureCache) -> CheckResult:
    """Second-order identities on random band-limited states."""
    grid = Grid(cache.n, 1.0)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(10):
        gamma = (1.0, 1.4, 2.0)[i % 3]
        params = PulseParams(delta=0.25 / 2.0, alpha=0.5, gamma=gamma, mu=1.0, lam=0.0)
        st = random_state(grid, rng)
        res_f, res_c = elliptic_identity_residual(st, params)
        udot = material_derivative(st, params).values
        rho_udot = st.rho.values * udot
        F = effective_flux(st, params).values
        curlcurl = spectral.curl_arr(grid, spectral.curl_arr(grid, st.u.values))
        grad_F = spectral.grad_arr(grid, F)
        mom = -curlcurl + grad_F - rho_udot
        res_m = (spectral.l2_norm_sq_arr(grid, mom) ** 0.5
                 / spectral.l2_norm_sq_arr(grid, rho_udot) ** 0.5)
        worst = max(worst, res_f, res_c, res_m)
    return CheckResult("identity_suite", worst <= 1e-10,
                       f"worst relative residual {worst:.3e} (tol 1e-10)")


def check_energy_balance(cache: FixtureCache) -> CheckResult:
    bench = cache.benchmark()
    res = energy_balance_residuals(bench.records, bench.params)
    diss = np.array([bench.params.mu * r.L2_grad_u**2 + bench.params.lam * r.L2_div_u**2
                     for r in bench.records])
    ts = np.array([r.t for r in bench.records])
    rel = np.abs(res[1:-1]) / diss[1:-1]
    worst = float(rel.max())

    res_f = energy_balance_residuals(bench.fine_records, bench.params)
    diss_f = np.array([bench.params.mu * r.L2_grad_u**2 + bench.params.lam * r.L2_div_u**2
                       for r in bench.fine_records])
    ts_f = np.array([r.t for r in bench.fine_records])
    horizon = cache.FINE_T_END
    sel = (ts[1:-1] <= horizon)
    sel_f = (ts_f[1:-1] <= horizon)
    coarse_max = float(rel[sel].max())
    fine_max = float((np.abs(res_f[1:-1]) / diss_f[1:-1])[sel_f].max())
    ratio = coarse_max / fine_max
    ok = worst <= 1e-3 and ratio >= 3.5 and abs(coarse_max - worst) / worst < 1e-9
    return CheckResult(
        "energy_balance",
        ok,
        f"max |residual|/dissipation {worst:.3e} (tol 1e-3); halving dt "
        f"reduces {ratio:.2f}x (need >= 3.5)",
    )


def check_mass_minrho(cache: FixtureCache) -> CheckResult:
    bench = cache.benchmark()
    drift = bench.summary.mass_drift
    floor = 2.0 ** (-1.0 / bench.params.gamma)
    ok = drift <= 1e-10 and bench.summary.min_rho >= floor
    return CheckResult(
        "mass_minrho",
        ok,
        f"mass drift {drift:.3e} (tol 1e-10); min rho {bench.summary.min_rho:.6f} "
        f">= 2^(-1/gamma) = {floor:.6f}",
    )


def check_explicit_inequality(cache: FixtureCache) -> CheckResult:
    bench = cache.benchmark()
    violations = 0
    worst = np.inf
    for rec in bench.records:
        for chk in rec.ineq_margins:
            if chk.hard:
                worst = min(worst, chk.margin)
                if not chk.satisfied:
                    violations += 1
    return CheckResult(
        "explicit_inequality",
        violations == 0,
        f"{violations} violations over {len(bench.records)} samples "
        f"(worst margin {worst:.3e})",
    )


def check_h_dual_formula(cache: FixtureCache) -> CheckResult:
    rhos = np.concatenate([np.linspace(0.5, 2.0, 61), np.geomspace(2.0, 100.0, 61)])
    worst = 0.0
    for gamma in (1.0, 1.4, 2.0, 3.0):
        d = h_direct(rhos, gamma)
        q = h_quadrature(rhos, gamma)
        den = np.maximum(np.abs(d), 1e-300)
        worst = max(worst, float((np.abs(q - d) / den).max()))
    return CheckResult("h_dual_formula", worst <= 1e-8,
                       f"worst relative disagreement {worst:.3e} (tol 1e-8)")


def check_toy_oracle(cache: FixtureCache) -> CheckResult:
    from scipy.integrate import solve_ivp

    delta, alpha, gamma = 0.25, 1.5, 2.0
    times = np.geomspace(1e-4, 1e3, 100)
    sol = solve_ivp(lambda t, f: -gamma * f**2, (0.0, times[-1]),
                    [delta ** (-alpha)], t_eval=times, method="LSODA",
                    rtol=1e-12, atol=1e-14)
    exact = toy_model(delta, alpha, gamma, times)
    err = float(np.max(np.abs(sol.y[0] - exact) / exact))
    return CheckResult("toy_oracle", err <= 1e-10,
                       f"max relative error vs adaptive ODE {err:.3e} (tol 1e-10)")


def check_schedule_arithmetic(cache: FixtureCache) -> CheckResult:
    sched = envelope_schedule(2.0 ** (-15), 1.0, 1.0, 0.1)
    t0_exact = 7.0 * 2.0 ** (-18)
    err_t0 = abs(sched.T0 - t0_exact)
    msgs = [f"T0 error {err_t0:.2e} (tol 1e-15)"]
    ok = err_t0 <= 1e-15 and sched.n0 == 15

    for delta, alpha in ((2.0 ** (-15), 1.0), (2.0 ** (-25), 1.0)):
        s = envelope_schedule(delta, alpha, 1.0, 0.1)
        l1 = envelope_l1(s)
        l1_cap = 3.0 / s.gamma * alpha * math.log(1.0 / delta)
        budgets = envelope_interval_budgets(s)
        cap = 2.0 / s.gamma * (s.n0 - 14)
        ok = ok and l1 <= l1_cap and budgets.sum() <= cap
        msgs.append(f"N0={s.n0}: L1 {l1:.3f} <= {l1_cap:.3f}, "
                    f"budget sum {budgets.sum():.3f} <= {cap:.3f}")
    return CheckResult("schedule_arithmetic", ok, "; ".join(msgs))


def check_collapse_surrogate(cache: FixtureCache) -> CheckResult:
    params, records, summary = cache.collapse()
    ts = np.array([r.t for r in records])
    amax = np.array([r.Linf_a for r in records])
    fit = fit_decay(ts, amax, window=(0.0, 0.1 / params.gamma), model="reciprocal")
    c1 = fit.params[1]
    ok = (amax[0] >= 32.0 and fit.r_squared >= 0.95
          and abs(c1 - params.gamma) <= 0.5 * params.gamma)
    return CheckResult(
        "collapse_surrogate",
        ok,
        f"amplitude {amax[0]:.1f} >= 32; reciprocal fit r2 {fit.r_squared:.4f} "
        f"(need >= 0.95), c1 {c1:.3f} vs gamma {params.gamma} (50% band)",
    )


def check_dyadic(cache: FixtureCache) -> CheckResult:
    grid = Grid(cache.n, 1.0)
    bank = DyadicBank.for_grid(grid)
    total = bank.low_multiplier() + sum(bank.band_multiplier(j) for j in bank.j_range)
    part_err = float(np.abs(total - 1.0).max())

    rng = np.random.default_rng(7)
    f = ScalarField(grid, rng.standard_normal((grid.n,) * 3))
    recon = low_block(f, bank).values + sum(
        dyadic_project(f, j, bank).values for j in bank.j_range)
    recon_err = float(np.abs(recon - f.values).max() / np.abs(f.values).max())

    v1 = projection_kernel_l1(128)
    v2 = projection_kernel_l1(256)
    stable = abs(v1 - v2) / v2
    ok = part_err <= 1e-12 and recon_err <= 1e-10 and stable <= 0.01
    return CheckResult(
        "dyadic_partition",
        ok,
        f"partition {part_err:.2e} (tol 1e-12); reconstruction {recon_err:.2e} "
        f"(tol 1e-10); kernel constant {v1:.4f}, doubling shift {stable * 100:.2f}% "
        f"(tol 1%)",
    )


def check_freq_split_parseval(cache: FixtureCache) -> CheckResult:
    from .diagnostics import freq_split_low

    grid = Grid(min(cache.n, 32), 1.0)
    rng = np.random.default_rng(11)
    st = random_state(grid, rng)
    gamma = 1.4
    full = freq_split_low(st, 1e12, gamma)
    varrho = st.rho.values - 1.0
    m = st.rho.values[None] * st.u.values
    exact = (gamma * spectral.l2_norm_sq_arr(grid, varrho)
             + spectral.l2_norm_sq_arr(grid, m))
    rel = abs(full - exact) / exact
    return CheckResult("freq_split_parseval", rel <= 1e-10,
                       f"relative gap at r -> inf: {rel:.3e} (tol 1e-10)")


def check_lagrangian_density(cache: FixtureCache) -> CheckResult:
    bench = cache.benchmark()
    residuals = [density_formula_residual(tr) for tr in bench.trackers]
    worst = max(residuals)
    return CheckResult(
        "lagrangian_density_formula",
        worst <= 1e-3 and len(residuals) == 16,
        f"{len(residuals)} particles, worst log-mismatch {worst:.3e} (tol 1e-3)",
    )


def check_mms_convergence(cache: FixtureCache) -> CheckResult:
    # gamma = 2 keeps every nonlinear product of the band-limited fields
    # inside the dealias ball, so the spatial discretization is exact and
    # the sweep isolates the time integrator
    params = PulseParams(delta=0.125, alpha=0.5, gamma=2.0, mu=0.005, lam=0.0)

    # temporal order: band-limited fields, spatially exact discretization
    mms_t = ManufacturedSolution("band_limited", amp_rho=0.05, amp_u=0.2, omega=3.0)
    grid_t = Grid(32, 1.0)
    t_end = 0.2
    errs = []
    for dt in (t_end / 25, t_end / 50, t_end / 100):
        cfg = SolverConfig(dt_init=dt, t_end=t_end, scheme="explicit_rk4",
                           diagnostics_every=10**9, adapt_dt=False)
        sink = _FinalState()
        run(mms_t.state(grid_t, 0.0), params, cfg, sinks=[sink],
            forcing=mms_t.forcing(params))
        errs.append(mms_t.error(sink.state))
    p1 = math.log2(errs[0] / errs[1])
    p2 = math.log2(errs[1] / errs[2])
    order = min(p1, p2)

    # spatial accuracy: full-spectrum fields, matched small step
    mms_x = ManufacturedSolution("full_spectrum", amp_rho=0.05, amp_u=0.1,
                                 kappa=3.0, omega=2.0)
    spatial = []
    for n in (32, 64):
        grid = Grid(n, 1.0)
        cfg = SolverConfig(dt_init=2e-5, t_end=1e-3, scheme="explicit_rk4",
                           diagnostics_every=10**9, adapt_dt=False)
        sink = _FinalState()
        run(mms_x.state(grid, 0.0), params, cfg, sinks=[sink],
            forcing=mms_x.forcing(params))
        spatial.append(mms_x.error(sink.state))
    drop = spatial[0] / spatial[1]
    ok = order >= 3.8 and drop >= 10.0
    return CheckResult(
        "mms_convergence",
        ok,
        f"temporal order {order:.2f} (need >= 3.8; orders {p1:.2f}/{p2:.2f}); "
        f"spatial error drop 32^3 -> 64^3: {drop:.1f}x (need >= 10)",
    )


class _FinalState:
    def __init__(self):
        self.state = None

    def on_sample(self, state, step_index):
        self.state = state


def check_qualitative_decay(cache: FixtureCache) -> CheckResult:
    bench = cache.benchmark()
    sched = envelope_schedule(bench.params.delta, bench.params.alpha,
                              bench.params.gamma, bench.params.epsilon)
    ts = np.array([r.t for r in bench.records])
    E = np.array([r.E for r in bench.records])
    D = np.array([r.D for r in bench.records])
    sel = ts >= sched.T0
    tail = E[sel]
    noise = 1e-6 * tail[0]
    increases = np.diff(tail)
    worst_rise = float(increases.max()) if len(increases) else 0.0
    d_integral = float(np.trapezoid(D, ts))
    ok = worst_rise <= noise and math.isfinite(d_integral)
    return CheckResult(
        "qualitative_decay",
        ok,
        f"E non-increasing after T0={sched.T0:.3g} (worst rise {worst_rise:.3e}, "
        f"noise floor {noise:.3e}); integral of D = {d_integral:.6f}",
    )


SUITES = {
    "identities": (check_identity_suite,),
    "energy": (check_energy_balance, check_mass_minrho),
    "inequality": (check_explicit_inequality,),
    "potential": (check_h_dual_formula,),
    "toy": (check_toy_oracle,),
    "schedule": (check_schedule_arithmetic,),
    "collapse": (check_collapse_surrogate,),
    "dyadic": (check_dyadic,),
    "freqsplit": (check_freq_split_parseval,),
    "lagrangian": (check_lagrangian_density,),
    "convergence": (check_mms_convergence,),
    "decay": (check_qualitative_decay,),
}


def run_suites(names=None, n: int = 64) -> list[CheckResult]:
    cache = FixtureCache(n=n)
    names = list(SUITES) if not names else list(names)
    results = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
        for fn in SUITES[name]:
            results.append(fn(cache))
    return results
