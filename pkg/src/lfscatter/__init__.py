"""Composite-particle scattering in DLCQ phi^4 theory (1+1D), simulated exactly at small harmonic resolution."""

from .errors import (
    BranchCutError,
    ConsistencyError,
    DegenerateStateError,
    DomainError,
    FitFailure,
    LFScatterError,
    NumericalError,
)
from .fock import FockState, SectorBasis, enumerate_basis, free_energy, ground_state_creator
from .hamiltonian import (
    ModelParams,
    h_free_operator,
    h_full_operator,
    harmonic_resolution_operator,
    sector_hamiltonian,
)
from .opalg import (
    Monomial,
    OperatorPolynomial,
    SectorMatrix,
    SectorVector,
    adjoint,
    apply_monomial,
    apply_operator,
    operator_matrix,
)
from .scatter import (
    CompositeSpec,
    SpectralLine,
    apply_dressed_creation,
    apply_polynomial_creation,
    fft_spectrum,
    pdf,
    prepare_composite,
    spectral_lines,
    transition_probability,
    wave_operator_in_sector,
)
from .spectral import SpectralDecomposition, diagonalize, exp_hermitian_generator, log_unitary, propagate
from .ucc import ClusterOperator, build_connector, fit_cluster_operator, verify_fit

__version__ = "0.1.0"

__all__ = [
    "BranchCutError",
    "ClusterOperator",
    "CompositeSpec",
    "ConsistencyError",
    "DegenerateStateError",
    "DomainError",
    "FitFailure",
    "FockState",
    "LFScatterError",
    "ModelParams",
    "Monomial",
    "NumericalError",
    "OperatorPolynomial",
    "SectorBasis",
    "SectorMatrix",
    "SectorVector",
    "SpectralDecomposition",
    "SpectralLine",
    "adjoint",
    "apply_dressed_creation",
    "apply_monomial",
    "apply_operator",
    "apply_polynomial_creation",
    "build_connector",
    "diagonalize",
    "enumerate_basis",
    "exp_hermitian_generator",
    "fft_spectrum",
    "fit_cluster_operator",
    "free_energy",
    "ground_state_creator",
    "h_free_operator",
    "h_full_operator",
    "harmonic_resolution_operator",
    "log_unitary",
    "operator_matrix",
    "pdf",
    "prepare_composite",
    "propagate",
    "sector_hamiltonian",
    "spectral_lines",
    "transition_probability",
    "verify_fit",
    "wave_operator_in_sector",
]
