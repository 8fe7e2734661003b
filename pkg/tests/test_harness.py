import math

import numpy as np
import pytest

from pulse_cns import (
    ConfigError,
    envelope_check,
    envelope_schedule,
    envelope_value,
    fit_decay,
    parse_config,
    thresholds_report,
    toy_model,
)
from pulse_cns.harness import default_config_text


def test_default_config_parses():
    cfg = parse_config(default_config_text())
    assert cfg.grid.n == 64
    assert cfg.pulse.delta == 0.125
    assert cfg.solver.scheme == "imex"
    assert len(cfg.seeds) == 4
    assert cfg.output_dir == "out"


def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("grid.n = 32\npulse.deltaa = 0.1\n")


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("solver.dealias = maybe\n")
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("grid.n = twelve\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("grid.n = 32\ngrid.n = 64\n")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config("grid.n 32\n")
    with pytest.raises(ConfigError, match="triplet"):
        parse_config("seeds = 0.1,0.2\n")
    # domain validation propagates as ConfigError
    with pytest.raises(ConfigError):
        parse_config("grid.n = 12\n")


def test_config_comments_and_seeds():
    cfg = parse_config("""
# comment
grid.n = 16  # trailing comment
seeds = 0.1,0.2,0.3 ; 0.4,0.5,0.6
""")
    assert cfg.grid.n == 16
    assert cfg.seeds == [(0.1, 0.2, 0.3), (0.4, 0.5, 0.6)]


# ---------------------------------------------------------------------------
# decay fitting
# ---------------------------------------------------------------------------

def test_fit_power_law():
    # data exact in the bracket coordinate fits to machine precision
    t = np.linspace(1.0, 100.0, 400)
    fit = fit_decay(t, (1.0 + t * t) ** -1.0, model="power")
    assert fit.exponent == pytest.approx(-2.0, abs=1e-12)
    # plain t^-2 deviates from the bracket only near t ~ 1; fitting past the
    # knee recovers the exponent within 0.01
    fit = fit_decay(t, t**-2.0, window=(3.0, 100.0), model="power")
    assert fit.exponent == pytest.approx(-2.0, abs=0.01)
    assert fit.r_squared > 0.999


def test_fit_reciprocal_exact():
    t = np.linspace(0.0, 5.0, 200)
    v = 1.0 / (0.1 + t)
    fit = fit_decay(t, v, model="reciprocal")
    assert fit.params[0] == pytest.approx(0.1, abs=1e-6)
    assert fit.params[1] == pytest.approx(1.0, abs=1e-6)
    assert fit.r_squared > 1.0 - 1e-12


def test_fit_reciprocal_on_toy_model():
    delta, alpha, gamma = 0.2, 1.5, 1.3
    t = np.linspace(0.0, 2.0, 256)
    fit = fit_decay(t, toy_model(delta, alpha, gamma, t), model="reciprocal")
    assert fit.params[0] == pytest.approx(delta**alpha, abs=1e-8)
    assert fit.params[1] == pytest.approx(gamma, abs=1e-8)


def test_fit_exponential():
    t = np.linspace(0.0, 3.0, 100)
    fit = fit_decay(t, 5.0 * np.exp(-1.7 * t), model="exponential")
    assert fit.exponent == pytest.approx(-1.7, abs=1e-9)


def test_fit_validation():
    t = np.linspace(1.0, 2.0, 50)
    with pytest.raises(ValueError):
        fit_decay(t, np.zeros_like(t), model="power")  # nonpositive
    with pytest.raises(ValueError):
        fit_decay(t[:5], t[:5], model="power")  # too few samples
    with pytest.raises(ValueError):
        fit_decay(t, t, window=(5.0, 6.0), model="power")  # empty window
    with pytest.raises(ValueError):
        fit_decay(np.full(20, 1.0), np.full(20, 2.0), model="power")  # degenerate
    with pytest.raises(ValueError):
        fit_decay(t, t, model="cubic")


# ---------------------------------------------------------------------------
# envelope checking
# ---------------------------------------------------------------------------

def _regime_schedule():
    return envelope_schedule(2.0 ** (-17), 1.0, 1.0, 0.1)


def test_envelope_check_passes_at_half_bound():
    sched = _regime_schedule()
    t = np.linspace(0.0, sched.T0, 400)
    series = np.array([0.5 * envelope_value(sched, min(tt, np.nextafter(sched.T0, 0)))
                       for tt in t])
    report = envelope_check(t, series, sched)
    assert report.in_regime and report.passed
    assert report.worst_margin == pytest.approx(0.5, abs=1e-9)


def test_envelope_check_flags_single_violation():
    sched = _regime_schedule()
    t = np.linspace(0.0, sched.T0, 400)
    series = np.array([0.5 * envelope_value(sched, min(tt, np.nextafter(sched.T0, 0)))
                       for tt in t])
    series[37] = 2.0 * envelope_value(sched, t[37])
    report = envelope_check(t, series, sched)
    assert not report.passed
    assert len(report.violations) == 1
    assert report.violations[0][0] == pytest.approx(t[37])


def test_envelope_check_requires_coverage():
    sched = _regime_schedule()
    t = np.linspace(0.0, sched.T0 / 2.0, 50)
    with pytest.raises(ValueError):
        envelope_check(t, np.ones_like(t), sched)


def test_envelope_check_surrogate_path():
    # out-of-regime: reciprocal fit quality decides
    sched = envelope_schedule(0.125, 2.0, 1.0, 0.1)
    assert not sched.in_regime
    t = np.linspace(0.0, 0.2, 300)
    series = toy_model(0.125, 2.0, 1.0, t)
    report = envelope_check(t, series, sched)
    assert report.passed
    assert report.fit is not None and report.fit.r_squared > 0.999

    noisy = series * np.exp(np.sin(60 * t) * 2.0)
    report2 = envelope_check(t, noisy, sched)
    assert not report2.passed


def test_thresholds_report_formats():
    sched = envelope_schedule(0.25, 2.0 / 3.0, 1.0, 0.1)
    t = np.linspace(0.0, 500.0, 2001)
    z = np.zeros_like(t)
    text = thresholds_report(sched, t, z, z, z)
    assert "T1 at t=5.99146" in text
    assert "T2 at t=400" in text
    assert "Linf_a=0" in text
    # truncated marks are labeled
    text2 = thresholds_report(sched, t[:10], z[:10], z[:10], z[:10])
    assert "beyond series" in text2
