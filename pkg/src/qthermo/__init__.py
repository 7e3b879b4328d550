"""Thermodynamics of small interacting quantum systems, exactly simulated.

The package evolves composite finite-dimensional systems under exact
unitary dynamics and books the full thermodynamic ledger: entropy-matched
effective temperatures, heat and work exchanged by each subsystem,
generalized ergotropy, the entropy-production inequalities that constrain
them, and the Carnot-type performance bounds of two-body machines.
"""

from .core import (
    DensityMatrix,
    Operator,
    SubsystemLayout,
    UnitaryPropagator,
    correlation_info,
    evolve,
    partial_trace,
    propagator,
    relative_entropy,
    tensor_embed,
    trace_distance,
    vn_entropy,
)
from .thermo import (
    HeatWork,
    PreparationOptimum,
    SigmaBundle,
    ThermalSnapshot,
    accessible_sigma,
    average_beta,
    effective_beta,
    effective_beta_series,
    energy_beta,
    energy_beta_series,
    entropy_production,
    ergotropy,
    free_energy,
    heat_work,
    minimize_preparation_cost,
    preparation_cost,
    sigma_erg,
    snapshot_series,
    thermal_relative_entropy,
    thermal_snapshot,
    thermal_state,
)
from .dynamics import (
    CompositeSystem,
    GateSchedule,
    LedgerRow,
    SourceDiagnostics,
    Trajectory,
    entropy_heat_identity_residuals,
    flat_top_schedule,
    ideal_source_probe,
    ledger,
    second_law_residuals,
    simulate,
    simulate_gated,
)
from .models import (
    PassiveQudit,
    PassiveQuditSpec,
    TwoQubitParams,
    analytic_two_qubit,
    couple_lowest_levels,
    engine_system,
    fridge_system,
    make_coupling,
    make_subsystem,
    passive_qudit,
    passive_qudit_engine_system,
    qudit_ladder_energies,
    qutrit_swap_system,
    rotated_thermal,
    two_qubit_layout,
)
from .machines import (
    CLOCK_DEFAULTS,
    ENGINE_DEFAULTS,
    FRIDGE_DEFAULTS,
    QUDIT_DEFAULTS,
    QUTRIT_DEFAULTS,
    MachineReport,
    SweepPeak,
    Violation,
    clock_machine,
    counterexample_qutrit,
    default_grid,
    first_fom_peak,
    flat_top_static_residual,
    passive_extraction,
    refined_bounds,
    run_engine,
    run_refrigerator,
    sweep_coupling,
)

__version__ = "0.1.0"
