import math

import numpy as np
import pytest

from pulse_cns import (
    Grid,
    PulseParams,
    ScalarField,
    State,
    Trajectory,
    VectorField,
    advect,
    density_formula_residual,
    envelope_schedule,
    envelope_value,
    toy_model,
)
from pulse_cns.lagrangian import (
    AMPLITUDE_PLATEAU,
    ParticleTracker,
    envelope_interval_budgets,
    envelope_l1,
    envelope_regime,
    sample_at,
)


def steady_snapshots(grid, u_values, times, rho_values=None):
    rho = rho_values if rho_values is not None else np.ones((grid.n,) * 3)
    return [State(t, ScalarField(grid, rho.copy()), VectorField(grid, u_values.copy()))
            for t in times]


def test_sample_at_matches_grid_points(grid16, rng):
    from pulse_cns.samples import random_scalar

    f = random_scalar(grid16, rng)
    idx = rng.integers(0, 16, size=(20, 3))
    pts = idx * grid16.dx
    vals = sample_at(grid16, f.values, pts)
    exact = f.values[idx[:, 0], idx[:, 1], idx[:, 2]]
    assert np.abs(vals - exact).max() < 1e-12


def test_sample_at_off_grid_single_mode(grid16):
    x = grid16.x[0]
    f = np.cos(2 * np.pi * 3 * x)
    pts = np.array([[0.123, 0.456, 0.789], [0.9999, 0.5, 0.25]])
    vals = sample_at(grid16, f, pts)
    assert np.abs(vals - np.cos(2 * np.pi * 3 * pts[:, 0])).max() < 1e-12


def test_advect_zero_velocity(grid16):
    snaps = steady_snapshots(grid16, np.zeros((3, 16, 16, 16)), [0.0, 0.1, 0.2])
    seeds = np.array([[0.3, 0.4, 0.5]])
    trajs = advect(seeds, 0.0, snaps, PulseParams())
    t, x, rho, a, F = trajs[0].as_arrays()
    assert np.abs(x - seeds[0]).max() == 0.0
    assert np.abs(rho - 1.0).max() < 1e-12


def test_advect_uniform_velocity_wraps(grid16):
    u = np.zeros((3, 16, 16, 16))
    u[0] = 0.7
    snaps = steady_snapshots(grid16, u, np.linspace(0.0, 2.0, 21))
    seeds = np.array([[0.9, 0.25, 0.25]])
    trajs = advect(seeds, 0.0, snaps, PulseParams(), substeps=2)
    t, x, *_ = trajs[0].as_arrays()
    expected = (0.9 + 0.7 * t) % 1.0
    assert np.abs(x[:, 0] - expected).max() < 1e-12
    assert np.abs(x[:, 1] - 0.25).max() < 1e-13


def test_advect_single_mode_against_reference(grid32):
    # steady single-mode shear: dX/dt = u(X) integrated to t = 1 and compared
    # against a tightly controlled reference solve of the same interpolant
    from scipy.integrate import solve_ivp

    A = 0.3
    z = grid32.x[2]
    u = np.zeros((3, 32, 32, 32))
    u[0] = A * np.sin(2 * np.pi * z)
    u[1] = A * np.cos(2 * np.pi * z)
    times = np.linspace(0.0, 1.0, 101)
    snaps = steady_snapshots(grid32, u, times)
    seed = np.array([[0.5, 0.5, 0.37]])
    trajs = advect(seed, 0.0, snaps, PulseParams(), substeps=2)
    _, x, *_ = trajs[0].as_arrays()

    def f(t, y):
        return [A * math.sin(2 * math.pi * y[2]), A * math.cos(2 * math.pi * y[2]), 0.0]

    ref = solve_ivp(f, (0.0, 1.0), seed[0], rtol=1e-12, atol=1e-14)
    assert np.abs(x[-1] - ref.y[:, -1] % 1.0).max() < 1e-6


def test_advect_validates_inputs(grid16):
    snaps = steady_snapshots(grid16, np.zeros((3, 16, 16, 16)), [0.0, 0.1])
    with pytest.raises(ValueError):
        advect(np.array([[0.1, 0.1, 0.1]]), 0.5, snaps, PulseParams())  # tau beyond range
    bad = [snaps[1], snaps[0]]
    with pytest.raises(ValueError):
        advect(np.array([[0.1, 0.1, 0.1]]), 0.0, bad, PulseParams())
    # seeds outside the box are wrapped, not rejected
    trajs = advect(np.array([[1.3, -0.2, 0.5]]), 0.0, snaps, PulseParams())
    assert (trajs[0].x[0] >= 0).all() and (trajs[0].x[0] < 1).all()


def test_density_formula_constant_coefficient(grid16):
    # u = 0 and uniform a + F = c: rho(t) = rho(0) exp(-c t) satisfies the
    # path representation; the trapezoid integral is exact for a constant
    c = 0.8
    tr = Trajectory(seed=np.zeros(3), tau=0.0)
    for t in np.linspace(0.0, 1.0, 33):
        tr.t.append(t)
        tr.x.append(np.zeros(3))
        tr.rho.append(math.exp(-c * t))
        tr.a.append(0.3 * c)
        tr.F.append(0.7 * c)
    assert density_formula_residual(tr) < 1e-12


def test_density_formula_smooth_coefficient():
    # time-varying uniform coefficient: trapezoid error O(dt^2)
    tr = Trajectory(seed=np.zeros(3), tau=0.0)
    ts = np.linspace(0.0, 1.0, 201)
    integral = lambda t: 0.5 * t + 0.1 * math.sin(t)  # antiderivative of c(t)

    for t in ts:
        tr.t.append(float(t))
        tr.x.append(np.zeros(3))
        tr.rho.append(math.exp(-integral(t)))
        tr.a.append(0.5 + 0.1 * math.cos(t))
        tr.F.append(0.0)
    assert density_formula_residual(tr) < 1e-6


def test_tracker_on_pulse_run(grid32):
    from pulse_cns import SolverConfig, build_pulse, run

    params = PulseParams(delta=0.125, alpha=0.5, gamma=1.0, v_amp=0.0)
    st = build_pulse(params, grid32)
    seeds = np.array([[0.5, 0.5, 0.5], [0.5625, 0.5, 0.5], [0.5, 0.4375, 0.5]])
    tracker = ParticleTracker(seeds, params)
    run(st, params, SolverConfig(dt_init=1e-3, t_end=0.05, scheme="imex"),
        sinks=[tracker])
    worst = max(density_formula_residual(tr) for tr in tracker.trajectories)
    assert worst < 1e-3
    # seed anchoring: first sample is the release point
    for tr, s in zip(tracker.trajectories, seeds):
        assert np.abs(tr.x[0] - s).max() == 0.0
        assert tr.t[0] == 0.0


def test_divergence_free_flow_preserves_density_along_path(grid32):
    # steady shear u = (A sin(2 pi z), 0, 0) is divergence-free, so the
    # transported density rho(t, x) = rho0(x1 - A sin(2 pi x3) t, x2, x3)
    # must be constant along tracked paths (interpolation consistency)
    A = 0.4
    z = grid32.x[2]

    def state_at(t):
        x1 = (grid32.x[0] - A * np.sin(2 * np.pi * z) * t) % 1.0
        rho = 1.0 + 0.2 * np.sin(2 * np.pi * x1)
        u = np.zeros((3,) + (grid32.n,) * 3)
        u[0] = A * np.sin(2 * np.pi * z)
        return State(t, ScalarField(grid32, rho), VectorField(grid32, u))

    times = np.linspace(0.0, 1.0, 101)
    snaps = [state_at(t) for t in times]
    seeds = np.array([[0.3, 0.6, 0.21], [0.8, 0.1, 0.48]])
    for tr in advect(seeds, 0.0, snaps, PulseParams(), substeps=1):
        rho_path = np.array(tr.rho)
        assert np.abs(rho_path - rho_path[0]).max() < 1e-6


def test_trajectory_csv(tmp_path):
    tr = Trajectory(seed=np.zeros(3), tau=0.0)
    tr.t = [0.0, 0.5]
    tr.x = [np.array([0.1, 0.2, 0.3]), np.array([0.2, 0.3, 0.4])]
    tr.rho = [1.0, 0.9]
    tr.a = [0.0, -0.1]
    tr.F = [0.0, 0.05]
    path = tmp_path / "traj.csv"
    tr.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x,y,z,rho,a,F"
    assert len(lines) == 3


# ---------------------------------------------------------------------------
# collapse model
# ---------------------------------------------------------------------------

def test_toy_model_values():
    assert toy_model(0.25, 1.0, 1.0, 0.0) == pytest.approx(4.0)
    # delta^alpha = 0.1, gamma = 2, t = 0.45: 1/(0.1 + 0.9) = 1
    assert toy_model(0.1, 1.0, 2.0, 0.45) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        toy_model(0.1, 1.0, 1.0, -0.5)


def test_toy_model_against_ode_oracle():
    from scipy.integrate import solve_ivp

    delta, alpha, gamma = 0.3, 1.2, 1.7
    times = np.geomspace(1e-4, 1e3, 100)
    sol = solve_ivp(lambda t, f: -gamma * f**2, (0.0, times[-1]),
                    [delta ** (-alpha)], t_eval=times, method="LSODA",
                    rtol=1e-12, atol=1e-14)
    exact = toy_model(delta, alpha, gamma, times)
    assert np.max(np.abs(sol.y[0] - exact) / exact) < 1e-10


def test_toy_model_shape_properties():
    delta, alpha, gamma = 0.2, 1.5, 1.3
    ts = np.linspace(0.0, 10.0, 1001)
    f = toy_model(delta, alpha, gamma, ts)
    df = np.diff(f)
    assert (df < 0).all()                 # strictly decreasing
    assert (np.diff(df) > 0).all()        # convex
    t_far = 1e6 * delta**alpha
    assert abs(gamma * t_far * toy_model(delta, alpha, gamma, t_far) - 1.0) < 1e-4


# ---------------------------------------------------------------------------
# envelope schedule
# ---------------------------------------------------------------------------

def test_schedule_reference_case():
    # amplitude exactly 2^15 at gamma = 1
    sched = envelope_schedule(2.0 ** (-15), 1.0, 1.0, 0.1)
    assert sched.n0 == 15
    assert sched.in_regime
    assert sched.interval_count == 1
    assert sched.T0 == pytest.approx(7.0 * 2.0 ** (-18), abs=1e-15)
    assert sched.T0 == pytest.approx(2.6703e-5, rel=1e-4)
    # envelope at t = 0 in the first interval
    assert envelope_value(sched, 0.0) == pytest.approx(4.0 * (1 + 2**15), rel=1e-12)


def test_schedule_bracket_for_deeper_amplitudes():
    for n0 in (16, 20, 25):
        sched = envelope_schedule(2.0 ** (-float(n0)) * 0.9, 1.0, 1.0, 0.1)
        assert sched.n0 == n0
        low, high = 7.0 * 2.0 ** (-18), 7.0 * 2.0 ** (-17)
        assert low < sched.T0 < high
        assert sched.interval_count == n0 - 14
        # strictly increasing interval ends
        assert all(b > a for a, b in zip(sched.t_js, sched.t_js[1:]))


def test_schedule_out_of_regime():
    sched = envelope_schedule(0.125, 0.5, 1.0, 0.1)
    assert not sched.in_regime
    assert sched.T0 == 0.0
    assert sched.interval_count == 0
    assert envelope_value(sched, 0.0) == AMPLITUDE_PLATEAU


def test_schedule_thresholds_formulas():
    # delta^(1 - 3 alpha / 4) = 0.5 at delta = 0.25, alpha = 2/3:
    # T1 = 2 ln 20, T2 = 400 at epsilon = 0.1
    sched = envelope_schedule(0.25, 2.0 / 3.0, 1.0, 0.1)
    assert sched.T1 == pytest.approx(2.0 * math.log(20.0), rel=1e-12)
    assert sched.T2 == pytest.approx(400.0, rel=1e-12)
    assert sched.beta == pytest.approx(1.0 - 0.5 * (1 + 1), rel=1e-12)


def test_thresholds_ordering_in_regime():
    sched = envelope_schedule(2.0 ** (-20), 1.0, 1.0, 0.05)
    assert sched.T0 < sched.T1 < sched.T2


def test_envelope_piecewise_values():
    sched = envelope_schedule(2.0 ** (-18), 1.0, 1.0, 0.1)
    edges = sched.interval_edges()
    for j in range(1, len(edges)):
        start = envelope_value(sched, edges[j - 1])
        assert start == pytest.approx(4.0 * (1 + 2.0 ** (sched.n0 + 1 - j)), rel=1e-12)
        # non-increasing and right-continuous within the interval
        tt = np.linspace(edges[j - 1], np.nextafter(edges[j], edges[j - 1]), 64)
        vals = np.array([envelope_value(sched, t) for t in tt])
        assert (np.diff(vals) <= 0).all()
    assert envelope_value(sched, sched.T0) == AMPLITUDE_PLATEAU
    assert envelope_regime(sched, sched.T0) == "plateau"
    assert envelope_regime(sched, sched.T1 + 1.0) == "small"


def test_envelope_value_at_collapse_end():
    # closing value of the last interval at N0 = 15 stays under 0.9 * 2^15
    sched = envelope_schedule(2.0 ** (-15), 1.0, 1.0, 0.1)
    val = envelope_value(sched, np.nextafter(sched.T0, 0.0))
    expect = 1.0 / (0.25 / (1 + 2**15) + (7.0 / 8.0) * 2.0 ** (-15))
    assert val == pytest.approx(expect, rel=1e-9)
    assert val <= 0.9 * 2**15


def test_envelope_budgets():
    for n0, gamma in ((15, 1.0), (22, 1.0), (20, 2.0)):
        delta = 2.0 ** (-float(n0)) * 0.95
        sched = envelope_schedule(delta, 1.0, gamma, 0.1)
        budgets = envelope_interval_budgets(sched)
        assert budgets.sum() <= 2.0 / gamma * (sched.n0 - 14)
        l1 = envelope_l1(sched)
        assert l1 <= 3.0 / gamma * 1.0 * math.log(1.0 / delta)
        # quadrature agrees with the closed-form interval integrals
        assert l1 == pytest.approx(budgets.sum(), rel=1e-5)
