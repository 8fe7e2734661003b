"""Figure builders over the pulse-cns CSV schemas.

Five kinds are supported:

  envelope   observed peak amplitude vs the piecewise analytic bound,
             with threshold markers; needs the envelope curve CSV
             (t, envelope) and optionally the diagnostics CSV and a
             markers CSV (name, t)
  energy     E, D, H_rho on log-log axes against the bracket <t>, with
             fitted late-window slopes annotated
  extrema    density minimum and maximum traces
  besov      the two monitored dyadic-norm timelines
  spectrum   shell-summed spectra (k, E_u, E_rho) on log-log axes

Inputs are read-only; output bytes are deterministic for identical
inputs (fixed style, pinned PNG metadata).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("envelope", "energy", "extrema", "besov", "spectrum")

_STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


class FigureError(RuntimeError):
    pass


@dataclass
class FigureSpec:
    kind: str
    output: Path
    diagnostics: Path | None = None
    envelope: Path | None = None
    markers: Path | None = None
    spectrum: Path | None = None
    fit_window: tuple[float, float] | None = None
    title: str = ""

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {FIGURE_KINDS}")


def read_csv_columns(path: Path, columns: list[str]) -> dict[str, np.ndarray]:
    """Load named columns; missing columns or empty series are errors."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        for col in columns:
            if col not in names:
                raise FigureError(f"{path}: missing column {col!r}")
        rows = [[float(row[c]) for c in columns] for row in reader]
    if not rows:
        raise FigureError(f"{path}: empty series")
    data = np.array(rows)
    return {c: data[:, i] for i, c in enumerate(columns)}


def _read_markers(path: Path) -> list[tuple[str, float]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or "name" not in reader.fieldnames \
                or "t" not in reader.fieldnames:
            raise FigureError(f"{path}: missing column 'name' or 't'")
        return [(row["name"], float(row["t"])) for row in reader]


def _fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _bracket(t: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + t * t)


def _save(fig, spec: FigureSpec):
    fig.savefig(spec.output, metadata={"Software": "figuregen"})
    plt.close(fig)


def plot(spec: FigureSpec) -> dict:
    """Render one figure; returns computed annotations (fitted slopes etc.)."""
    with plt.rc_context(_STYLE):
        return _DISPATCH[spec.kind](spec)


def _plot_envelope(spec: FigureSpec) -> dict:
    if spec.envelope is None:
        raise FigureError("envelope figure needs --envelope (curve CSV)")
    curve = read_csv_columns(spec.envelope, ["t", "envelope"])
    fig, ax = plt.subplots()
    ax.plot(curve["t"], curve["envelope"], color="tab:red", lw=1.4,
            label="analytic bound")
    observed = None
    if spec.diagnostics is not None:
        diag = read_csv_columns(spec.diagnostics, ["t", "Linf_a"])
        observed = diag
        ax.plot(diag["t"], diag["Linf_a"], color="tab:blue", lw=1.2,
                label="observed peak amplitude")
    if spec.markers is not None:
        for name, t in _read_markers(spec.markers):
            if t <= 0 or t > 1.5 * float(curve["t"].max()):
                continue
            ax.axvline(t, color="gray", lw=0.6, ls="--", alpha=0.7)
            ax.annotate(name, (t, ax.get_ylim()[1]), fontsize=7,
                        ha="left", va="top", rotation=90)
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("peak pressure amplitude")
    ax.set_title(spec.title or "amplitude envelope")
    ax.legend(loc="upper right", fontsize=8)
    _save(fig, spec)
    return {"series": "envelope+observed" if observed is not None else "envelope"}


def _plot_energy(spec: FigureSpec) -> dict:
    if spec.diagnostics is None:
        raise FigureError("energy figure needs --diagnostics")
    diag = read_csv_columns(spec.diagnostics, ["t", "E", "D", "H_rho"])
    t = diag["t"]
    fig, ax = plt.subplots()
    slopes = {}
    window = spec.fit_window
    for name, color in (("E", "tab:blue"), ("D", "tab:orange"), ("H_rho", "tab:green")):
        y = diag[name]
        pos = y > 0
        if not pos.any():
            continue
        xb = _bracket(t[pos])
        ax.plot(xb, y[pos], color=color, lw=1.2, label=name)
        sel = np.ones(pos.sum(), dtype=bool)
        if window is not None:
            sel = (t[pos] >= window[0]) & (t[pos] <= window[1])
        if sel.sum() >= 8 and np.ptp(xb[sel]) > 0:
            s = _fit_slope(xb[sel], y[pos][sel])
            slopes[name] = s
            ax.annotate(f"{name}: slope {s:.2f}", (xb[sel][-1], y[pos][sel][-1]),
                        color=color, fontsize=8)
    if not slopes:
        raise FigureError("energy figure: no positive series to fit")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("<t>")
    ax.set_ylabel("energy functionals")
    ax.set_title(spec.title or "energy decay")
    ax.legend(loc="lower left", fontsize=8)
    _save(fig, spec)
    return {"slopes": slopes}


def _plot_extrema(spec: FigureSpec) -> dict:
    if spec.diagnostics is None:
        raise FigureError("extrema figure needs --diagnostics")
    diag = read_csv_columns(spec.diagnostics, ["t", "min_rho", "max_rho"])
    fig, ax = plt.subplots()
    ax.plot(diag["t"], diag["max_rho"], color="tab:red", lw=1.2, label="max density")
    ax.plot(diag["t"], diag["min_rho"], color="tab:blue", lw=1.2, label="min density")
    ax.axhline(1.0, color="gray", lw=0.6, ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel("density extrema")
    ax.set_title(spec.title or "density envelope")
    ax.legend(loc="center right", fontsize=8)
    _save(fig, spec)
    return {"min_rho": float(diag["min_rho"].min()),
            "max_rho": float(diag["max_rho"].max())}


def _plot_besov(spec: FigureSpec) -> dict:
    if spec.diagnostics is None:
        raise FigureError("besov figure needs --diagnostics")
    diag = read_csv_columns(spec.diagnostics,
                            ["t", "besov_u_B12_21", "besov_rho_B34_41"])
    fig, ax = plt.subplots()
    ax.plot(diag["t"], diag["besov_u_B12_21"], lw=1.2,
            label="velocity B^{1/2}_{2,1}")
    ax.plot(diag["t"], diag["besov_rho_B34_41"], lw=1.2,
            label="density B^{3/4}_{4,1}")
    ax.set_xlabel("t")
    ax.set_ylabel("dyadic norms")
    ax.set_yscale("log")
    ax.set_title(spec.title or "critical-norm timelines")
    ax.legend(fontsize=8)
    _save(fig, spec)
    return {}


def _plot_spectrum(spec: FigureSpec) -> dict:
    if spec.spectrum is None:
        raise FigureError("spectrum figure needs --spectrum")
    data = read_csv_columns(spec.spectrum, ["k", "E_u", "E_rho"])
    fig, ax = plt.subplots()
    for name, label in (("E_u", "velocity"), ("E_rho", "density")):
        pos = (data[name] > 0) & (data["k"] > 0)
        if pos.any():
            ax.plot(data["k"][pos], data[name][pos], lw=1.2, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("|k|")
    ax.set_ylabel("shell energy")
    ax.set_title(spec.title or "spectra")
    ax.legend(fontsize=8)
    _save(fig, spec)
    return {}


_DISPATCH = {
    "envelope": _plot_envelope,
    "energy": _plot_energy,
    "extrema": _plot_extrema,
    "besov": _plot_besov,
    "spectrum": _plot_spectrum,
}
