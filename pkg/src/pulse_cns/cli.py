"""Command-line entry point.

Subcommands: init, run, diagnose, envelope, toy, verify, report.
Exit codes: 0 success, 1 check/run failure, 2 usage or config errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import spectral
from .checkpoint import read_checkpoint, write_checkpoint
from .diagnostics import (
    DiagnosticsCSVWriter,
    DiagnosticsOptions,
    compute_record,
    energy_balance_residuals,
)
from .harness import (
    ConfigError,
    default_config_text,
    fit_decay,
    envelope_check,
    load_config,
    thresholds_report,
)
from .lagrangian import (
    ParticleTracker,
    envelope_l1,
    envelope_schedule,
    envelope_value,
    toy_model,
)
from .pulse import PulseParams, build_pulse, derived_initials
from .solver import SolverConfig, run


def _cmd_init(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.txt"
    if cfg_path.exists() and not args.force:
        print(f"error: {cfg_path} exists (use --force to overwrite)", file=sys.stderr)
        return 2
    cfg_path.write_text(default_config_text())
    cfg = load_config(cfg_path)
    state = build_pulse(cfg.pulse, cfg.grid)
    write_checkpoint(out / "initial.pcns", state, cfg.pulse)
    init = derived_initials(state, cfg.pulse)
    print(f"wrote {cfg_path} and initial checkpoint")
    print(f"  |a0|_Linf = {init.a0_Linf:.6g}, scaled energy = {init.E0_scaled:.6g}, "
          f"boundary tail = {init.boundary_tail:.3e}")
    return 0


class _CheckpointSink:
    def __init__(self, directory: Path, params):
        self.directory = directory
        self.params = params

    def on_checkpoint(self, state, step_index):
        write_checkpoint(self.directory / f"checkpoint_{step_index:08d}.pcns",
                         state, self.params)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    state = build_pulse(cfg.pulse, cfg.grid)
    sinks = [DiagnosticsCSVWriter(out / "diagnostics.csv", cfg.pulse, cfg.diagnostics)]
    if cfg.solver.checkpoint_every > 0:
        sinks.append(_CheckpointSink(out, cfg.pulse))
    tracker = None
    if cfg.seeds:
        tracker = ParticleTracker(np.array(cfg.seeds), cfg.pulse)
        sinks.append(tracker)

    summary = run(state, cfg.pulse, cfg.solver, sinks=sinks)
    if tracker is not None:
        for i, tr in enumerate(tracker.trajectories):
            tr.write_csv(out / f"trajectory_{i:03d}.csv")

    from .dyadic import DyadicBank

    bank = DyadicBank.for_grid(cfg.grid)
    lines = [
        f"steps = {summary.steps}",
        f"final_time = {summary.final_time:.17g}",
        f"min_rho = {summary.min_rho:.17g}",
        f"max_rho = {summary.max_rho:.17g}",
        f"mass_drift = {summary.mass_drift:.3e}",
        f"wall_time_s = {summary.wall_time:.2f}",
        # dyadic norms in the CSV are truncated to the grid-resolvable bands
        f"besov_j_range = [{bank.j_min}, {bank.j_max}]",
        f"aborted = {summary.aborted}",
    ]
    if summary.aborted:
        lines.append(f"abort_reason = {summary.abort_reason}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 1 if summary.aborted else 0


def _cmd_diagnose(args) -> int:
    paths = [Path(p) for p in args.checkpoints]
    for p in paths:
        if not p.exists():
            print(f"error: missing checkpoint {p}", file=sys.stderr)
            return 2
    loaded = [read_checkpoint(p) for p in paths]
    loaded.sort(key=lambda pair: pair[0].t)
    meta = loaded[0][1]
    params = PulseParams(delta=args.delta, alpha=args.alpha, gamma=meta["gamma"],
                         mu=max(meta["mu"], 1e-300), lam=meta["lam"])
    options = DiagnosticsOptions(c1=args.c1)
    records = [compute_record(st, params, options) for st, _ in loaded]
    res = energy_balance_residuals(records, params)
    for rec, r in zip(records, res):
        rec.energy_balance_residual = float(r)
    with open(args.out, "w") as fh:
        fh.write(",".join(records[0].scalar_columns()) + "\n")
        for rec in records:
            fh.write(",".join(f"{v:.17g}" for v in rec.scalar_values()) + "\n")
    print(f"wrote {args.out} ({len(records)} rows)")

    if args.spectrum:
        st = loaded[-1][0]
        _write_spectrum(args.spectrum, st)
        print(f"wrote {args.spectrum}")
    return 0


def _write_spectrum(path, state) -> None:
    """Shell-summed spectra of u and rho-1 (integer-|k| bins)."""
    g = state.grid
    KX, KY, KZ = g._kint
    kmag = np.sqrt(KX**2 + KY**2 + KZ**2)
    bins = np.arange(0, g.n // 2 + 1)
    shell = np.clip(np.rint(kmag).astype(int), 0, len(bins) - 1)
    w = g.spectral_weights

    def shell_sum(values):
        total = np.zeros(len(bins))
        comps = values if values.ndim == 4 else values[None]
        for c in comps:
            ch = spectral.coefficients(g, c)
            np.add.at(total, shell.ravel(), (w * np.abs(ch) ** 2).ravel())
        return total * g.length**3

    e_u = shell_sum(state.u.values)
    e_rho = shell_sum(state.rho.values - 1.0)
    with open(path, "w") as fh:
        fh.write("k,E_u,E_rho\n")
        for k, a, b in zip(bins, e_u, e_rho):
            fh.write(f"{k},{a:.17g},{b:.17g}\n")


def _cmd_envelope(args) -> int:
    sched = envelope_schedule(args.delta, args.alpha, args.gamma, args.epsilon)
    print(f"N0 = {sched.n0} ({'paper regime' if sched.in_regime else 'surrogate regime'})")
    print(f"T0 = {sched.T0:.9e}")
    print(f"T1 = {sched.T1:.9e}")
    print(f"T2 = {sched.T2:.9e}")
    print(f"beta = {sched.beta:.9g}")
    if sched.t_js:
        print(f"intervals = {sched.interval_count}, L1 budget = {envelope_l1(sched):.6g}")
    for j, tj in enumerate(sched.t_js[:12], start=1):
        print(f"  t_{j} = {tj:.9e}")
    if sched.interval_count > 12:
        print(f"  ... ({sched.interval_count - 12} more)")
    if args.csv:
        edges = sched.interval_edges()
        tmax = sched.T0 if sched.T0 > 0 else 1.0
        ts = np.unique(np.concatenate([
            np.linspace(0.0, tmax, 2048),
            edges, np.nextafter(edges[1:], 0.0)]))
        with open(args.csv, "w") as fh:
            fh.write("t,envelope\n")
            for t in ts:
                fh.write(f"{t:.17g},{envelope_value(sched, float(t)):.17g}\n")
        print(f"wrote {args.csv}")
    if args.markers:
        with open(args.markers, "w") as fh:
            fh.write("name,t\n")
            for j, tj in enumerate(sched.t_js, start=1):
                fh.write(f"t_{j},{tj:.17g}\n")
            fh.write(f"T0,{sched.T0:.17g}\nT1,{sched.T1:.17g}\nT2,{sched.T2:.17g}\n")
        print(f"wrote {args.markers}")
    return 0


def _cmd_toy(args) -> int:
    val = toy_model(args.delta, args.alpha, args.gamma, args.t)
    print(f"{val:.17g}")
    return 0


def _cmd_verify(args) -> int:
    from .acceptance import SUITES, run_suites

    names = args.suite or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        print(f"error: unknown suite(s) {unknown}; choose from {sorted(SUITES)}",
              file=sys.stderr)
        return 2
    results = run_suites(names, n=args.grid_n)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run)
    csv_path = run_dir / "diagnostics.csv"
    if not csv_path.exists():
        print(f"error: {csv_path} not found", file=sys.stderr)
        return 2
    import csv as _csv

    with open(csv_path) as fh:
        reader = _csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        print("error: empty diagnostics CSV", file=sys.stderr)
        return 2
    t = np.array([float(r["t"]) for r in rows])
    linf_a = np.array([float(r["Linf_a"]) for r in rows])
    l6_a = np.array([float(r["L6_a"]) for r in rows])
    l2_a = np.array([float(r["L2_a"]) for r in rows])
    E = np.array([float(r["E"]) for r in rows])

    sched = envelope_schedule(args.delta, args.alpha, args.gamma, args.epsilon)
    lines = [thresholds_report(sched, t, linf_a, l6_a, l2_a)]
    report = envelope_check(t, linf_a, sched)
    lines.append(report.summary())
    if (E > 0).all() and len(t) >= 8 and t[-1] > 1.0:
        fit = fit_decay(t, E, window=(1.0, float(t[-1])), model="power")
        lines.append(f"late-time energy fit: exponent {fit.exponent:.3f} "
                     f"r2 {fit.r_squared:.4f} on window {fit.window}")
    text = "\n".join(lines) + "\n"
    (run_dir / "report.txt").write_text(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pulse-cns",
                                 description="pulse-driven compressible-flow "
                                             "simulator and verification harness")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="write a template config and initial checkpoint")
    p.add_argument("--out", default="out")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=_cmd_init)

    p = sub.add_parser("run", help="integrate a configured run, streaming CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override the configured output dir")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("diagnose", help="recompute diagnostics from checkpoints")
    p.add_argument("checkpoints", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--delta", type=float, default=0.125)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--c1", type=float, default=1.0)
    p.add_argument("--spectrum", default=None, help="also write a shell spectrum CSV")
    p.set_defaults(fn=_cmd_diagnose)

    p = sub.add_parser("envelope", help="print the dyadic schedule and thresholds")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--csv", default=None, help="write the envelope curve")
    p.add_argument("--markers", default=None, help="write threshold markers")
    p.set_defaults(fn=_cmd_envelope)

    p = sub.add_parser("toy", help="evaluate the quadratic collapse model")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--t", type=float, required=True)
    p.set_defaults(fn=_cmd_toy)

    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--suite", action="append", default=None,
                   help="suite name (repeatable); default: all")
    p.add_argument("--grid-n", type=int, default=64)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("report", help="summarize a finished run directory")
    p.add_argument("--run", required=True)
    p.add_argument("--delta", type=float, default=0.125)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(fn=_cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
