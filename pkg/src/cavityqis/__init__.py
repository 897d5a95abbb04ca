"""Cavity-QED quantum information sharing: a single-qubit secret split
through GHZ or W entanglement, and validation of the effective two-atom
Hamiltonian behind it."""

from .model import (
    CANONICAL,
    EffectiveCoupling,
    FockCutoff,
    InteractionSchedule,
    PhysicalParams,
    RegimeWarning,
    build_H0,
    build_He,
    build_HI,
    build_JC,
    evolution_U,
    jc_evolution,
    reconstruction_time,
)
from .protocols import (
    PROBE_SECRET,
    Correction,
    CorrectionTable,
    ProtocolResult,
    SecretState,
    WCoefficients,
    derive_correction_table,
    ghz_distribute,
    prepare_ghz,
    prepare_w,
    run_ghz_exact,
    run_ghz_sampled,
    run_w_exact,
    run_w_sampled,
    scenario_intercept_resend,
    scenario_no_cooperation,
    w_distribute,
)
from .qcore import (
    BranchSet,
    ConvergenceError,
    HilbertLayout,
    OperatorMatrix,
    RandomSource,
    StateVector,
    atom_ket,
    enumerate_branches,
    fidelity,
    hermitian_expm,
    measure,
    partial_trace,
    propagate_td,
    tensor,
)

__all__ = [
    "CANONICAL",
    "EffectiveCoupling",
    "FockCutoff",
    "InteractionSchedule",
    "PhysicalParams",
    "RegimeWarning",
    "build_H0",
    "build_He",
    "build_HI",
    "build_JC",
    "evolution_U",
    "jc_evolution",
    "reconstruction_time",
    "PROBE_SECRET",
    "Correction",
    "CorrectionTable",
    "ProtocolResult",
    "SecretState",
    "WCoefficients",
    "derive_correction_table",
    "ghz_distribute",
    "prepare_ghz",
    "prepare_w",
    "run_ghz_exact",
    "run_ghz_sampled",
    "run_w_exact",
    "run_w_sampled",
    "scenario_intercept_resend",
    "scenario_no_cooperation",
    "w_distribute",
    "BranchSet",
    "ConvergenceError",
    "HilbertLayout",
    "OperatorMatrix",
    "RandomSource",
    "StateVector",
    "atom_ket",
    "enumerate_branches",
    "fidelity",
    "hermitian_expm",
    "measure",
    "partial_trace",
    "propagate_td",
    "tensor",
]

__version__ = "0.1.0"
