"""Run configuration, decay-law fitting, and envelope/threshold reports.

Config files are flat `section.key = value` lines; `#` starts a comment.
Unknown keys are rejected with their line number so typos cannot silently
fall back to defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsOptions
from .fields import Grid
from .lagrangian import EnvelopeSchedule, envelope_value
from .pulse import PulseParams
from .solver import SolverConfig


@dataclass
class RunConfig:
    grid: Grid = field(default_factory=lambda: Grid(64, 1.0))
    pulse: PulseParams = field(default_factory=PulseParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    diagnostics: DiagnosticsOptions = field(default_factory=DiagnosticsOptions)
    seeds: list[tuple[float, float, float]] = field(default_factory=list)
    output_dir: str = "out"


_SCHEMA = {
    "grid.n": int,
    "grid.L": float,
    "pulse.delta": float,
    "pulse.alpha": float,
    "pulse.gamma": float,
    "pulse.mu": float,
    "pulse.lambda": float,
    "pulse.epsilon": float,
    "pulse.phi_amp": float,
    "pulse.v_amp": float,
    "pulse.grad_amp": float,
    "solver.dt_init": float,
    "solver.cfl_safety": float,
    "solver.t_end": float,
    "solver.dealias": bool,
    "solver.scheme": str,
    "solver.checkpoint_every": int,
    "solver.diagnostics_every": int,
    "solver.positivity_floor": float,
    "solver.adapt_dt": bool,
    "diag.c1": float,
    "diag.q_grad_a": float,
    "diag.r_freq_split": float,
    "diag.besov": bool,
    "seeds": str,
    "output.dir": str,
}


class ConfigError(ValueError):
    pass


def _parse_bool(s: str, lineno: int) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"line {lineno}: expected a boolean, got {s!r}")


def _parse_seeds(s: str, lineno: int):
    seeds = []
    for part in s.split(";"):
        part = part.strip()
        if not part:
            continue
        coords = part.split(",")
        if len(coords) != 3:
            raise ConfigError(f"line {lineno}: seed {part!r} is not an x,y,z triplet")
        seeds.append(tuple(float(c) for c in coords))
    return seeds


def parse_config(text: str) -> RunConfig:
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        typ = _SCHEMA[key]
        try:
            if typ is bool:
                raw[key] = _parse_bool(value, lineno)
            elif key == "seeds":
                raw[key] = _parse_seeds(value, lineno)
            else:
                raw[key] = typ(value)
        except ConfigError:
            raise
        except ValueError as err:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {err}") from err

    def pick(prefix: str, names: dict[str, str]):
        return {attr: raw[f"{prefix}.{key}"] for key, attr in names.items()
                if f"{prefix}.{key}" in raw}

    try:
        grid = Grid(n=raw.get("grid.n", 64), length=raw.get("grid.L", 1.0))
        pulse = PulseParams(**pick("pulse", {
            "delta": "delta", "alpha": "alpha", "gamma": "gamma", "mu": "mu",
            "lambda": "lam", "epsilon": "epsilon", "phi_amp": "phi_amp",
            "v_amp": "v_amp", "grad_amp": "grad_amp"}))
        solver = SolverConfig(**pick("solver", {
            "dt_init": "dt_init", "cfl_safety": "cfl_safety", "t_end": "t_end",
            "dealias": "dealias", "scheme": "scheme",
            "checkpoint_every": "checkpoint_every",
            "diagnostics_every": "diagnostics_every",
            "positivity_floor": "positivity_floor", "adapt_dt": "adapt_dt"}))
        diag = DiagnosticsOptions(**pick("diag", {
            "c1": "c1", "q_grad_a": "q_grad_a", "r_freq_split": "r_freq_split",
            "besov": "besov"}))
    except ValueError as err:
        raise ConfigError(str(err)) from err
    return RunConfig(grid=grid, pulse=pulse, solver=solver, diagnostics=diag,
                     seeds=raw.get("seeds", []), output_dir=raw.get("output.dir", "out"))


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def default_config_text() -> str:
    return """\
# pulse-cns run configuration
grid.n = 64
grid.L = 1.0

pulse.delta = 0.125
pulse.alpha = 0.5
pulse.gamma = 1.0
pulse.mu = 1.0
pulse.lambda = 0.0
pulse.epsilon = 0.1
pulse.phi_amp = 1.0
pulse.v_amp = 0.0
pulse.grad_amp = 1.0

solver.dt_init = 1e-3
solver.cfl_safety = 0.4
solver.t_end = 0.5
solver.dealias = true
solver.scheme = imex
solver.checkpoint_every = 0
solver.diagnostics_every = 1
solver.adapt_dt = true

diag.c1 = 1.0
diag.q_grad_a = 3.3333333333333335
diag.r_freq_split = 2.0
diag.besov = true

# semicolon-separated x,y,z triplets (box coordinates)
seeds = 0.5,0.5,0.5; 0.5625,0.5,0.5; 0.5,0.5625,0.5; 0.5,0.5,0.5625
output.dir = out
"""


# ---------------------------------------------------------------------------
# decay-law fitting
# ---------------------------------------------------------------------------

FIT_MODELS = ("power", "exponential", "reciprocal")


@dataclass
class FitResult:
    model: str
    params: tuple[float, ...]   # power/exponential: (log-prefactor, slope); reciprocal: (c0, c1)
    r_squared: float
    window: tuple[float, float]

    @property
    def exponent(self) -> float:
        """Slope in the model's linearizing coordinates."""
        return self.params[1]


def _bracket(t: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + t * t)


def fit_decay(t, values, window=None, model: str = "power") -> FitResult:
    """Least squares in the model's linearizing coordinates.

    power:       log v = c0 + s * log <t>   (exponent = s)
    exponential: log v = c0 + s * t
    reciprocal:  1/v   = c0 + c1 * t
    """
    if model not in FIT_MODELS:
        raise ValueError(f"unknown fit model {model!r}; expected one of {FIT_MODELS}")
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, values = t[sel], values[sel]
    if len(t) < 8:
        raise ValueError(f"fit window holds {len(t)} samples; need at least 8")
    if np.ptp(t) <= 0:
        raise ValueError("degenerate fit window")
    if (values <= 0).any():
        raise ValueError("fit requires strictly positive values")

    if model == "power":
        x, y = np.log(_bracket(t)), np.log(values)
    elif model == "exponential":
        x, y = t, np.log(values)
    else:
        x, y = t, 1.0 / values
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return FitResult(model=model, params=(float(coef[0]), float(coef[1])),
                     r_squared=max(0.0, min(1.0, r2)),
                     window=(float(t.min()), float(t.max())))


# ---------------------------------------------------------------------------
# envelope checking and threshold tables
# ---------------------------------------------------------------------------

@dataclass
class EnvelopeReport:
    in_regime: bool
    passed: bool
    worst_margin: float           # min over samples of (bound - observed)/bound
    violations: list[tuple[float, float, float]]  # (t, observed, bound)
    interval_margins: list[tuple[int, float]]
    fit: FitResult | None = None

    def summary(self) -> str:
        mode = "regime" if self.in_regime else "surrogate"
        head = f"envelope check ({mode}): {'PASS' if self.passed else 'FAIL'}"
        lines = [head, f"  worst margin: {self.worst_margin:.4f}"]
        for j, m in self.interval_margins:
            lines.append(f"  interval {j}: margin {m:.4f}")
        if self.fit is not None:
            lines.append(f"  reciprocal fit: c0={self.fit.params[0]:.6g} "
                         f"c1={self.fit.params[1]:.6g} r2={self.fit.r_squared:.4f}")
        for t, obs, bound in self.violations[:10]:
            lines.append(f"  violation at t={t:.6g}: observed {obs:.6g} > bound {bound:.6g}")
        return "\n".join(lines)


def envelope_check(t, linf_a, schedule: EnvelopeSchedule,
                   surrogate_window: float | None = None,
                   r2_threshold: float = 0.95) -> EnvelopeReport:
    """Compare an amplitude series against the dyadic envelope.

    In the deep-amplitude regime any sample above the bound fails. Outside
    it the bound is not theorem-backed at desk scale, so the check becomes
    property-based: a reciprocal-model fit over the early window must
    explain the series (r^2 at or above the threshold).
    """
    t = np.asarray(t, dtype=float)
    linf_a = np.asarray(linf_a, dtype=float)
    if len(t) != len(linf_a) or len(t) == 0:
        raise ValueError("series and times must align and be nonempty")
    if schedule.in_regime and float(t.max()) < schedule.T0 * (1.0 - 1e-9):
        raise ValueError("series must cover [0, min(t_end, T0)]")

    bounds = np.array([envelope_value(schedule, tt) for tt in t])
    rel = (bounds - linf_a) / bounds
    violations = [(float(tt), float(o), float(b))
                  for tt, o, b in zip(t, linf_a, bounds) if o > b]

    interval_margins = []
    edges = schedule.interval_edges()
    for j in range(1, len(edges)):
        sel = (t >= edges[j - 1]) & (t < edges[j])
        if sel.any():
            interval_margins.append((j, float(rel[sel].min())))

    if schedule.in_regime:
        passed = not violations
        fit = None
    else:
        if surrogate_window is None:
            surrogate_window = 0.1 / schedule.gamma
        try:
            fit = fit_decay(t, linf_a, window=(0.0, surrogate_window), model="reciprocal")
            passed = fit.r_squared >= r2_threshold
        except ValueError:
            fit = None
            passed = False
    return EnvelopeReport(in_regime=schedule.in_regime, passed=passed,
                          worst_margin=float(rel.min()), violations=violations,
                          interval_margins=interval_margins, fit=fit)


def thresholds_report(schedule: EnvelopeSchedule, t, linf_a, l6_a, l2_a) -> str:
    """Tabulate observed amplitude norms at the schedule's time thresholds."""
    t = np.asarray(t, dtype=float)
    series = {"Linf_a": np.asarray(linf_a, float), "L6_a": np.asarray(l6_a, float),
              "L2_a": np.asarray(l2_a, float)}
    l6_switch = 6.0 * (2.0 + schedule.alpha) * math.log(1.0 / schedule.delta)
    marks = [("T0", schedule.T0), ("T1", schedule.T1),
             ("L6_switch", l6_switch), ("T2", schedule.T2)]
    lines = [
        "threshold report",
        f"  N0={schedule.n0} intervals={schedule.interval_count} "
        f"beta={schedule.beta:.6g} regime={'yes' if schedule.in_regime else 'no'}",
        f"  T0={schedule.T0:.6g} T1={schedule.T1:.6g} T2={schedule.T2:.6g} "
        f"L6_switch={l6_switch:.6g}",
    ]
    for name, when in marks:
        if when > t.max() + 1e-12:
            lines.append(f"  {name} at t={when:.6g}: beyond series (truncated)")
            continue
        idx = int(np.argmin(np.abs(t - when)))
        vals = ", ".join(f"{k}={v[idx]:.6g}" for k, v in series.items())
        lines.append(f"  {name} at t={when:.6g} (sample t={t[idx]:.6g}): {vals}")
    return "\n".join(lines)
