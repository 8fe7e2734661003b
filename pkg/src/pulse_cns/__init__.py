"""Pseudo-spectral simulator and verification harness for 3D barotropic
compressible flow with short-pulse initial data."""

from .checkpoint import read_checkpoint, write_checkpoint
from .diagnostics import (
    DiagnosticsCSVWriter,
    DiagnosticsOptions,
    DiagnosticsRecord,
    compute_record,
    effective_flux,
    elliptic_identity_residual,
    energies,
    energy_balance_residuals,
    freq_split_low,
    grad_a_evolution_residual,
    inequality_monitor,
    material_derivative,
    potential_energy,
)
from .dyadic import DyadicBank, besov_norm, cbar_star, dyadic_project, low_block
from .fields import Grid, ScalarField, VectorField
from .harness import (
    ConfigError,
    EnvelopeReport,
    FitResult,
    RunConfig,
    default_config_text,
    envelope_check,
    fit_decay,
    load_config,
    parse_config,
    thresholds_report,
)
from .lagrangian import (
    EnvelopeSchedule,
    ParticleTracker,
    Trajectory,
    advect,
    density_formula_residual,
    envelope_schedule,
    envelope_value,
    toy_model,
)
from .manufactured import ManufacturedSolution
from .pulse import InitDiagnostics, PulseParams, build_pulse, derived_initials
from .solver import (
    PositivityError,
    RunSummary,
    SolverConfig,
    State,
    cfl_dt,
    rhs,
    run,
    step,
)
from .spectral import dealias, lp_norm, spectral_derivative

__version__ = "0.1.0"
