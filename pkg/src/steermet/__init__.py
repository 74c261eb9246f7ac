"""Simulation toolkit for metrological steering tests under superpositions
of noisy phase shifts."""

from .channels import (
    BranchResult,
    ControlState,
    DilationModel,
    KrausChannel,
    PhaseConvention,
    canonical_dilation,
    conditioned_branch,
    dephased_shift,
    depolarized_shift,
    effective_dephasing_visibility,
    effective_depolarizing_visibility,
    interference_operator,
    phase_unitary,
    superposed_apply,
)
from .metrology import (
    Assemblage,
    AssemblageMember,
    MsiReport,
    PhaseFamily,
    branch_averaged_msi,
    build_table1_assemblage,
    classical_fi,
    msi_violation,
    optimal_classical_fi,
    optimal_qfi,
    optimal_variance,
    qfi,
    sld,
    variance,
)
from .qmath import DensityMatrix, eig_hermitian, embed, partial_trace, tensor

__all__ = [
    "Assemblage", "AssemblageMember", "BranchResult", "ControlState",
    "DensityMatrix", "DilationModel", "KrausChannel", "MsiReport",
    "PhaseConvention", "PhaseFamily", "branch_averaged_msi",
    "build_table1_assemblage", "canonical_dilation", "classical_fi",
    "conditioned_branch", "dephased_shift", "depolarized_shift",
    "effective_dephasing_visibility", "effective_depolarizing_visibility",
    "eig_hermitian", "embed", "interference_operator", "msi_violation",
    "optimal_classical_fi", "optimal_qfi", "optimal_variance",
    "partial_trace", "phase_unitary", "qfi", "sld", "superposed_apply",
    "tensor", "variance",
]

__version__ = "0.1.0"
