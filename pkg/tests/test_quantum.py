"""Tests for GHZ targets, measurement operators and the fidelity witness."""

import numpy as np
import pytest

from timebin_ghz import InvalidArgumentError
from timebin_ghz.quantum import (
    DensityMatrix,
    PureState,
    bell_fidelity_decomposition,
    bell_fidelity_from_expectations,
    biseparability_witness,
    chi_operator,
    coherence_flip_operator,
    equatorial_pauli,
    fidelity_decomposition,
    fidelity_from_expectations,
    ghz_target,
    mk_operator,
    pz_operator,
    random_density_matrix,
    witness_populations,
)


# =============================================================================
# Target State
# =============================================================================


class TestGhzTarget:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_two_nonzero_amplitudes(self, n):
        amps = ghz_target(n).amplitudes
        assert np.count_nonzero(amps) == 2
        assert amps[0] == pytest.approx(1 / np.sqrt(2))
        assert amps[-1] == pytest.approx(-1 / np.sqrt(2))

    def test_normalized(self):
        assert np.linalg.norm(ghz_target(3).amplitudes) == pytest.approx(1.0)

    def test_single_qubit_rejected(self):
        with pytest.raises(InvalidArgumentError, match="Qubit count"):
            ghz_target(1)

    def test_too_many_qubits_rejected(self):
        with pytest.raises(InvalidArgumentError, match="exceeds"):
            ghz_target(9)


class TestPureState:
    def test_normalizes_on_construction(self):
        state = PureState(np.array([3.0, 4.0]))
        assert np.allclose(state.amplitudes, [0.6, 0.8])

    def test_zero_vector_rejected(self):
        with pytest.raises(InvalidArgumentError, match="all zero"):
            PureState(np.zeros(2))

    def test_overlap_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError, match="Dimension mismatch"):
            ghz_target(2).overlap(ghz_target(3))


class TestDensityMatrix:
    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidArgumentError, match="Hermitian"):
            DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_rejects_bad_trace(self):
        with pytest.raises(InvalidArgumentError, match="trace"):
            DensityMatrix(np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(InvalidArgumentError, match="negative eigenvalue"):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_maximally_mixed_expectation(self):
        rho = DensityMatrix.maximally_mixed(8)
        assert rho.expectation(pz_operator(3)) == pytest.approx(0.25)


# =============================================================================
# Operators
# =============================================================================


class TestOperators:
    def test_equatorial_pauli_single_qubit(self):
        assert np.allclose(equatorial_pauli(1, 1), [[0, -1], [-1, 0]])

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_equatorial_pauli_eigenvalues(self, n):
        for k in range(1, n + 1):
            assert np.allclose(np.linalg.eigvalsh(equatorial_pauli(k, n)), [-1, 1])

    def test_k_out_of_range(self):
        with pytest.raises(InvalidArgumentError, match="k must lie"):
            equatorial_pauli(4, 3)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_chi_is_minus_coherence_flip(self, n):
        assert np.allclose(chi_operator(n).matrix, -coherence_flip_operator(n), atol=1e-12)

    def test_mk_labels(self):
        assert mk_operator(2, 3).label == "M2"
        assert pz_operator(3).label == "Pz"
        assert chi_operator(3).label == "chi"

    def test_three_qubit_sign_pattern(self):
        rho = DensityMatrix.from_pure(ghz_target(3))
        signs = [np.sign(rho.expectation(mk_operator(k, 3))) for k in (1, 2, 3)]
        assert signs == [-1, 1, -1]


# =============================================================================
# Fidelity Decomposition
# =============================================================================


class TestFidelityDecomposition:
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_ideal_state(self, n):
        result = fidelity_decomposition(DensityMatrix.from_pure(ghz_target(n)), n)
        assert result.pz == pytest.approx(1.0, abs=1e-12)
        assert result.chi == pytest.approx(1.0, abs=1e-12)
        assert result.fidelity == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_projector_overlap(self, n):
        generator = np.random.default_rng(2024)
        projector = ghz_target(n).projector()
        for _ in range(1000):
            rho = random_density_matrix(2**n, generator)
            direct = rho.expectation(projector)
            assert fidelity_decomposition(rho, n).fidelity == pytest.approx(direct, abs=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError, match="does not match"):
            fidelity_decomposition(DensityMatrix.maximally_mixed(4), 3)

    def test_from_measured_expectations(self):
        result = fidelity_from_expectations(0.76, [-0.40, 0.35, -0.33])
        assert result.chi == pytest.approx(0.36)
        assert result.fidelity == pytest.approx(0.56)

    def test_needs_an_mk(self):
        with pytest.raises(InvalidArgumentError):
            fidelity_from_expectations(1.0, [])


class TestBellDecomposition:
    def test_ideal_bell_state(self):
        result = bell_fidelity_decomposition(DensityMatrix.from_pure(ghz_target(2)))
        assert result.my == pytest.approx(-1.0)
        assert result.mx == pytest.approx(1.0)
        assert result.fidelity == pytest.approx(1.0)

    def test_measured_values(self):
        result = bell_fidelity_from_expectations(0.917, 0.62, -0.60)
        assert result.chi == pytest.approx(0.61)
        assert result.fidelity == pytest.approx(0.7635)

    def test_agrees_with_general_decomposition(self, rng):
        rho = random_density_matrix(4, rng)
        assert bell_fidelity_decomposition(rho).fidelity == pytest.approx(
            fidelity_decomposition(rho, 2).fidelity, abs=1e-12
        )


# =============================================================================
# Biseparability Witness
# =============================================================================


class TestWitness:
    MEASURED = {
        "001": 0.010,
        "010": 0.011,
        "100": 0.030,
        "011": 0.035,
        "101": 0.012,
        "110": 0.009,
    }

    def test_measured_data_violate(self):
        result = biseparability_witness(self.MEASURED, 0.716)
        assert result.lhs == pytest.approx(0.358)
        assert result.rhs == pytest.approx(0.05338, abs=1e-4)
        assert result.violated

    def test_mixed_state_does_not_violate(self):
        rho = DensityMatrix.maximally_mixed(8)
        populations = witness_populations(rho)
        chi = fidelity_decomposition(rho, 3).chi
        assert not biseparability_witness(populations, chi).violated

    def test_ideal_state_violates(self):
        rho = DensityMatrix.from_pure(ghz_target(3))
        result = biseparability_witness(witness_populations(rho), 1.0)
        assert result.rhs == pytest.approx(0.0)
        assert result.violated

    def test_missing_population(self):
        partial = dict(self.MEASURED)
        del partial["110"]
        with pytest.raises(InvalidArgumentError, match="Missing populations: 110"):
            biseparability_witness(partial, 0.5)

    def test_negative_population(self):
        bad = dict(self.MEASURED, **{"001": -0.1})
        with pytest.raises(InvalidArgumentError, match="negative"):
            biseparability_witness(bad, 0.5)

    def test_requires_three_qubits(self):
        with pytest.raises(InvalidArgumentError, match="three-qubit"):
            witness_populations(DensityMatrix.maximally_mixed(4))
