"""
Quantum-core submodule.

GHZ target states, the P̂z / M̂k / χ̂ measurement operators, the fidelity
decomposition and the three-qubit biseparability witness.
"""

from timebin_ghz.quantum._states import (
    MAX_QUBITS,
    BellDecomposition,
    DensityMatrix,
    FidelityDecomposition,
    MeasurementOperator,
    PureState,
    WitnessResult,
    bell_fidelity_decomposition,
    bell_fidelity_from_expectations,
    biseparability_witness,
    chi_operator,
    coherence_flip_operator,
    equatorial_eigenstates,
    equatorial_pauli,
    fidelity_decomposition,
    fidelity_from_expectations,
    ghz_target,
    mk_operator,
    pz_operator,
    random_density_matrix,
    witness_populations,
)

__all__ = [
    "MAX_QUBITS",
    "PureState",
    "DensityMatrix",
    "MeasurementOperator",
    "FidelityDecomposition",
    "BellDecomposition",
    "WitnessResult",
    "ghz_target",
    "equatorial_eigenstates",
    "equatorial_pauli",
    "mk_operator",
    "pz_operator",
    "chi_operator",
    "coherence_flip_operator",
    "fidelity_decomposition",
    "fidelity_from_expectations",
    "bell_fidelity_decomposition",
    "bell_fidelity_from_expectations",
    "biseparability_witness",
    "witness_populations",
    "random_density_matrix",
]
