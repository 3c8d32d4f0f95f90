"""Lie-Schwinger block-diagonalization of gapped quantum chains."""
from .engine import (
    EngineConfig,
    PotentialTable,
    RunReport,
    SeriesDiagnostics,
    StepIndex,
    apply_alpha,
    build_g,
    initial_table,
    iterate_steps,
    lie_schwinger_series,
    load_checkpoint,
    run_blockdiag,
    save_checkpoint,
    step_sequence,
)
from .errors import *  # noqa: F401,F403
from .majorant import bj_coefficients, bj_tail, tau_domain_estimate
from .models import (
    ChainSpec,
    FullHamiltonian,
    assemble_full_hamiltonian,
    build_anharmonic_model,
    build_spin_model,
    load_spec,
    normalize_onsite,
    save_spec,
)
from .operators import (
    IntervalSupport,
    LocalOperator,
    VacuumProjectors,
    reduced_resolvent,
    tensor_embed,
    vacuum_projectors,
    weighted_norm,
)
from .verification import (
    analyticity_report,
    cauchy_coefficients,
    check_gap,
    direct_conjugation_check,
    exact_spectrum,
    neumann_expansion_check,
    thermo_analysis,
    unitarity_check,
)

__version__ = "0.1.0"
