"""Structure-preserving simulator for a chemotaxis compressible flow
model: barotropic Navier-Stokes with friction, coupled to a parabolic
chemical concentration through a logarithmic-free-energy-compatible
source, plus optional density diffusion and artificial pressure
regularizations.

The package couples the solver to its own certification machinery:
energy-inequality audits, a coupling-term interpolation audit, relative
energy comparisons between resolutions, and a weak-strong uniqueness
diagnostic.
"""

from .dynamics import Forcing, SchemeSettings, cfl_dt, rhs, run, step
from .energetics import (
    EnergyLedger,
    c_l1_audit,
    energy_audit,
    energy_audit_sweep,
    energy_csv_text,
    energy_ledger,
    ledger_series,
    sugiyama_ensemble_audit,
    sugiyama_required_c1,
)
from .errors import (
    CflUnderflowError,
    ConfigError,
    NonFiniteFieldError,
    SimulationError,
    SnapshotFormatError,
)
from .fields import (
    BCKind,
    Grid,
    PhysParams,
    ScalarField,
    State,
    Trajectory,
    VectorField,
    integrate_cellwise,
    make_grid,
)
from .mms import ConvergenceReport, ManufacturedSolution, convergence_study, default_manufactured
from .operators import StencilOps
from .relenergy import (
    JTerms,
    RefState,
    j_term_breakdown,
    reference_series,
    relative_ledger,
    relenergy_audit,
    restrict_state,
    weak_strong_diagnostic,
)
from .snapshot import read_snapshot, write_snapshot
from .thermo import (
    PressureLaw,
    SugiyamaExponents,
    bregman_psi,
    internal_energy,
    pressure,
    psi_prime,
    psi_second,
    relative_pressure,
    sugiyama_exponents,
)

__version__ = "0.1.0"

__all__ = [
    "BCKind",
    "CflUnderflowError",
    "ConfigError",
    "ConvergenceReport",
    "EnergyLedger",
    "Forcing",
    "Grid",
    "JTerms",
    "ManufacturedSolution",
    "NonFiniteFieldError",
    "PhysParams",
    "PressureLaw",
    "RefState",
    "ScalarField",
    "SchemeSettings",
    "SimulationError",
    "SnapshotFormatError",
    "State",
    "StencilOps",
    "SugiyamaExponents",
    "Trajectory",
    "VectorField",
    "bregman_psi",
    "c_l1_audit",
    "cfl_dt",
    "convergence_study",
    "default_manufactured",
    "energy_audit",
    "energy_audit_sweep",
    "energy_csv_text",
    "energy_ledger",
    "integrate_cellwise",
    "internal_energy",
    "j_term_breakdown",
    "ledger_series",
    "make_grid",
    "pressure",
    "psi_prime",
    "psi_second",
    "read_snapshot",
    "reference_series",
    "relative_ledger",
    "relative_pressure",
    "relenergy_audit",
    "restrict_state",
    "rhs",
    "run",
    "step",
    "sugiyama_ensemble_audit",
    "sugiyama_exponents",
    "sugiyama_required_c1",
    "weak_strong_diagnostic",
    "write_snapshot",
]
