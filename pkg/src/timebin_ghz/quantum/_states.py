"""
State vectors, density matrices and the GHZ fidelity witness operators.

Qubit ordering follows the generation protocol: qubit 0 is the spin, qubits
1..N are the photonic time-bin qubits in emission order. Logical |0⟩ is the
early photon and, after the final π-pulse, spin-down; logical |1⟩ is the late
photon and spin-up. Basis index ``i`` of a 2^n vector reads qubit 0 as its
most significant bit.

Example:
    >>> from timebin_ghz.quantum import ghz_target, DensityMatrix, fidelity_decomposition
    >>> rho = DensityMatrix.from_pure(ghz_target(3))
    >>> round(fidelity_decomposition(rho, 3).fidelity, 12)
    1.0
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Mapping, Sequence

import numpy as np

from timebin_ghz._errors import InvalidArgumentError

__all__ = [
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
    "MAX_QUBITS",
]

MAX_QUBITS = 8

_HERMITIAN_TOL = 1e-12
_TRACE_TOL = 1e-10
_PSD_TOL = 1e-10

_WITNESS_KEYS = ("001", "010", "100", "011", "101", "110")


# =============================================================================
# Data Classes
# =============================================================================


@dataclass(frozen=True)
class PureState:
    """Normalized state vector."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size == 0:
            raise InvalidArgumentError("PureState needs at least one amplitude")
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise InvalidArgumentError("PureState amplitudes are all zero")
        object.__setattr__(self, "amplitudes", amps / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: PureState) -> complex:
        """Return ⟨self|other⟩."""
        if other.dim != self.dim:
            raise InvalidArgumentError(
                f"Dimension mismatch: {self.dim} vs {other.dim}"
            )
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidArgumentError(f"Density matrix must be square, got {mat.shape}")
        if not np.allclose(mat, mat.conj().T, atol=_HERMITIAN_TOL, rtol=0):
            raise InvalidArgumentError("Density matrix is not Hermitian")
        trace = np.trace(mat).real
        if abs(trace - 1.0) > _TRACE_TOL:
            raise InvalidArgumentError(f"Density matrix trace is {trace}, expected 1")
        if np.linalg.eigvalsh(mat).min() < -_PSD_TOL:
            raise InvalidArgumentError("Density matrix has a negative eigenvalue")
        object.__setattr__(self, "entries", mat)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_pure(cls, state: PureState) -> DensityMatrix:
        return cls(state.projector())

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityMatrix:
        return cls(np.eye(dim, dtype=complex) / dim)

    def expectation(self, operator: np.ndarray | MeasurementOperator) -> float:
        """Return Tr(ρ·O) for a Hermitian operator O."""
        matrix = operator.matrix if isinstance(operator, MeasurementOperator) else operator
        if matrix.shape != self.entries.shape:
            raise InvalidArgumentError(
                f"Operator shape {matrix.shape} does not match state dim {self.dim}"
            )
        return float(np.trace(self.entries @ matrix).real)


@dataclass(frozen=True)
class MeasurementOperator:
    """Hermitian observable with a label (``Pz``, ``M1``..``Mn``, ``chi``)."""

    label: str
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class FidelityDecomposition:
    pz: float
    chi: float
    fidelity: float


@dataclass(frozen=True)
class BellDecomposition:
    pz: float
    mx: float
    my: float
    chi: float
    fidelity: float


@dataclass(frozen=True)
class WitnessResult:
    """Outcome of the three-qubit biseparability test."""

    lhs: float
    rhs: float
    violated: bool


# =============================================================================
# Helpers
# =============================================================================


def _check_qubits(n: int, minimum: int = 1) -> None:
    if not isinstance(n, (int, np.integer)) or n < minimum:
        raise InvalidArgumentError(f"Qubit count must be an integer >= {minimum}, got {n!r}")
    if n > MAX_QUBITS:
        raise InvalidArgumentError(f"Qubit count {n} exceeds the supported maximum {MAX_QUBITS}")


def _kron_power(matrix: np.ndarray, n: int) -> np.ndarray:
    return reduce(np.kron, [matrix] * n)


def _as_matrix(rho: DensityMatrix | np.ndarray) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.entries
    return DensityMatrix(rho).entries


def equatorial_eigenstates(k: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return |+_k⟩, |−_k⟩ = (|0⟩ ± e^{ikπ/n}|1⟩)/√2."""
    phase = np.exp(1j * k * np.pi / n)
    plus = np.array([1.0, phase], dtype=complex) / np.sqrt(2)
    minus = np.array([1.0, -phase], dtype=complex) / np.sqrt(2)
    return plus, minus


# =============================================================================
# Target State and Operators
# =============================================================================


def ghz_target(n: int) -> PureState:
    """
    Return (|0⟩^⊗n − |1⟩^⊗n)/√2.

    Args:
        n: Total number of qubits (spin plus photons), at least 2

    Returns:
        The 2^n-dimensional target state
    """
    _check_qubits(n, minimum=2)
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1.0
    amps[-1] = -1.0
    return PureState(amps / np.sqrt(2))


def equatorial_pauli(k: int, n: int) -> np.ndarray:
    """
    Single-qubit operator |+_k⟩⟨+_k| − |−_k⟩⟨−_k|.

    Example:
        >>> equatorial_pauli(1, 1).real
        array([[ 0., -1.],
               [-1.,  0.]])
    """
    _check_qubits(n)
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"k must lie in 1..{n}, got {k}")
    plus, minus = equatorial_eigenstates(k, n)
    return np.outer(plus, plus.conj()) - np.outer(minus, minus.conj())


def mk_operator(k: int, n: int) -> MeasurementOperator:
    """
    Equatorial correlation operator M̂k on n qubits.

    M̂k = −σ_k^⊗n with σ_k = equatorial_pauli(k, n). The overall sign
    references the minus phase of the target state, so that
    χ̂ = (1/n)Σ(−1)^k M̂k has expectation +1 on ghz_target(n).
    """
    single = equatorial_pauli(k, n)
    return MeasurementOperator(label=f"M{k}", matrix=-_kron_power(single, n))


def pz_operator(n: int) -> MeasurementOperator:
    """Projector |0…0⟩⟨0…0| + |1…1⟩⟨1…1|."""
    _check_qubits(n)
    diag = np.zeros(2**n)
    diag[0] = diag[-1] = 1.0
    return MeasurementOperator(label="Pz", matrix=np.diag(diag).astype(complex))


def coherence_flip_operator(n: int) -> np.ndarray:
    """|0⟩⟨1|^⊗n + |1⟩⟨0|^⊗n, built directly."""
    _check_qubits(n)
    mat = np.zeros((2**n, 2**n), dtype=complex)
    mat[0, -1] = mat[-1, 0] = 1.0
    return mat


def chi_operator(n: int) -> MeasurementOperator:
    """
    Coherence witness χ̂ = (1/n)Σ_{k=1..n}(−1)^k M̂k.

    Equals −(|0⟩⟨1|^⊗n + |1⟩⟨0|^⊗n) elementwise.
    """
    _check_qubits(n)
    total = sum((-1) ** k * mk_operator(k, n).matrix for k in range(1, n + 1))
    return MeasurementOperator(label="chi", matrix=total / n)


# =============================================================================
# Fidelity Decomposition
# =============================================================================


def fidelity_decomposition(rho: DensityMatrix | np.ndarray, n: int) -> FidelityDecomposition:
    """
    Decompose the GHZ fidelity as F = (⟨P̂z⟩ + ⟨χ̂⟩)/2.

    Args:
        rho: Density matrix of dimension 2^n
        n: Number of qubits

    Returns:
        FidelityDecomposition with pz, chi and fidelity
    """
    _check_qubits(n, minimum=2)
    mat = _as_matrix(rho)
    if mat.shape[0] != 2**n:
        raise InvalidArgumentError(
            f"Density matrix dimension {mat.shape[0]} does not match n={n} (2^n={2**n})"
        )
    pz = float(np.trace(mat @ pz_operator(n).matrix).real)
    chi = float(np.trace(mat @ chi_operator(n).matrix).real)
    return FidelityDecomposition(pz=pz, chi=chi, fidelity=(pz + chi) / 2)


def fidelity_from_expectations(pz: float, mk: Sequence[float]) -> FidelityDecomposition:
    """
    Fidelity from measured ⟨P̂z⟩ and ⟨M̂1⟩..⟨M̂n⟩.

    Example:
        >>> round(fidelity_from_expectations(0.76, [-0.40, 0.35, -0.33]).fidelity, 2)
        0.56
    """
    n = len(mk)
    if n == 0:
        raise InvalidArgumentError("At least one M_k expectation is required")
    chi = sum((-1) ** k * m for k, m in enumerate(mk, start=1)) / n
    return FidelityDecomposition(pz=float(pz), chi=float(chi), fidelity=(pz + chi) / 2)


def bell_fidelity_decomposition(rho: DensityMatrix | np.ndarray) -> BellDecomposition:
    """
    Two-qubit (spin-photon) analogue with M̂y = M̂1 and M̂x = M̂2.

    χ̂ = (M̂x − M̂y)/2 and F = (⟨P̂z⟩ + ⟨χ̂⟩)/2.
    """
    mat = _as_matrix(rho)
    if mat.shape[0] != 4:
        raise InvalidArgumentError(f"Bell decomposition needs dim 4, got {mat.shape[0]}")
    pz = float(np.trace(mat @ pz_operator(2).matrix).real)
    my = float(np.trace(mat @ mk_operator(1, 2).matrix).real)
    mx = float(np.trace(mat @ mk_operator(2, 2).matrix).real)
    return bell_fidelity_from_expectations(pz, mx, my)


def bell_fidelity_from_expectations(pz: float, mx: float, my: float) -> BellDecomposition:
    """
    Example:
        >>> round(bell_fidelity_from_expectations(0.917, 0.62, -0.60).fidelity, 4)
        0.7635
    """
    chi = (mx - my) / 2
    return BellDecomposition(pz=pz, mx=mx, my=my, chi=chi, fidelity=(pz + chi) / 2)


# =============================================================================
# Biseparability Witness
# =============================================================================


def witness_populations(rho: DensityMatrix | np.ndarray) -> dict[str, float]:
    """Extract the six cross populations ρ_001 … ρ_110 of a three-qubit state."""
    mat = _as_matrix(rho)
    if mat.shape[0] != 8:
        raise InvalidArgumentError(f"Witness needs a three-qubit state, got dim {mat.shape[0]}")
    return {key: float(mat[int(key, 2), int(key, 2)].real) for key in _WITNESS_KEYS}


def biseparability_witness(populations: Mapping[str, float], chi: float) -> WitnessResult:
    """
    Test genuine three-qubit entanglement.

    A biseparable state satisfies
    |ρ_000,111| ≤ √(ρ001ρ110) + √(ρ010ρ101) + √(ρ100ρ011).
    The coherence magnitude is bounded below by |⟨χ̂⟩|/2, which is used as lhs.

    Args:
        populations: Mapping with keys "001", "010", "100", "011", "101", "110"
        chi: Measured ⟨χ̂⟩

    Returns:
        WitnessResult with lhs, rhs and whether the inequality is violated
    """
    missing = [key for key in _WITNESS_KEYS if key not in populations]
    if missing:
        raise InvalidArgumentError(f"Missing populations: {', '.join(missing)}")
    for key in _WITNESS_KEYS:
        if populations[key] < 0:
            raise InvalidArgumentError(f"Population {key} is negative: {populations[key]}")
    p = populations
    rhs = (
        np.sqrt(p["001"] * p["110"])
        + np.sqrt(p["010"] * p["101"])
        + np.sqrt(p["100"] * p["011"])
    )
    lhs = abs(chi) / 2
    return WitnessResult(lhs=float(lhs), rhs=float(rhs), violated=bool(lhs > rhs))


def random_density_matrix(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """Draw a full-rank random state ρ = GG†/Tr(GG†) with Gaussian G."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    mat = g @ g.conj().T
    mat = (mat + mat.conj().T) / 2
    return DensityMatrix(mat / np.trace(mat).real)
