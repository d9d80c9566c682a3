"""
Stochastic error channels applied along a trajectory.

Each channel draws from the trajectory's generator, mutates the joint state
in place, returns it and appends an ErrorEvent when an error occurs. With the
error parameter at its no-error limit (C = ∞, Q = ∞, F = 1, γd = 0) every
channel is the identity and consumes no random numbers.

Spin basis: index 0 is ↑, index 1 is ↓ (the optically bright state).

Example:
    >>> from timebin_ghz.channels import spin_flip_probability, dephasing_probability
    >>> round(spin_flip_probability(34), 4)
    0.0145
    >>> round(dephasing_probability(1 / 0.235, 0.069), 4)
    0.0314
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from timebin_ghz._errors import InvalidArgumentError

if TYPE_CHECKING:
    from timebin_ghz.montecarlo import JointState

__all__ = [
    "ErrorEvent",
    "ERROR_KINDS",
    "spin_flip_probability",
    "reset_probability",
    "raman_probability",
    "dephasing_probability",
    "derive_dephasing_rate",
    "indistinguishability",
    "apply_laser_spin_flip",
    "apply_offres_excitation",
    "apply_raman_flip",
    "apply_pure_dephasing",
    "apply_init_error",
    "apply_readout_error",
]

logger = logging.getLogger(__name__)

ERROR_KINDS = (
    "init_flip",
    "readout_flip",
    "raman_flip",
    "laser_spin_flip",
    "pure_dephase",
    "offres_excitation",
)

_UP = 0
_DOWN = 1


@dataclass(frozen=True)
class ErrorEvent:
    """
    Record of one error on a trajectory.

    ``location`` is the index of the pulse event in the sequence (−1 for
    initialization, the sequence length for readout). ``detail`` holds the
    repopulated spin ("up"/"down") for a laser spin flip and the phase in
    [0, 2π) for pure dephasing.
    """

    kind: str
    location: int
    detail: Any = None


# =============================================================================
# Probabilities
# =============================================================================


def spin_flip_probability(q_factor: float) -> float:
    """
    Flip probability of one π-rotation, p_f = ½(1 − e^{−1/Q}).

    Raises:
        InvalidArgumentError: If Q ≤ 0
    """
    if not q_factor > 0:
        raise InvalidArgumentError(f"q_factor must be > 0, got {q_factor}")
    if math.isinf(q_factor):
        return 0.0
    return 0.5 * (1.0 - math.exp(-1.0 / q_factor))


def reset_probability(p_f: float, angle: float = math.pi) -> float:
    """
    Probability that a rotation of ``angle`` resets the spin.

    A reset lands in ↑ or ↓ with equal odds, so a π-pulse resets with
    probability 2p_f. The exponent κT scales linearly with the angle.
    """
    if not 0.0 <= p_f <= 0.5:
        raise InvalidArgumentError(f"p_f must lie in [0, 0.5], got {p_f}")
    if p_f == 0:
        return 0.0
    return 1.0 - (1.0 - 2.0 * p_f) ** (abs(angle) / math.pi)


def raman_probability(cyclicity: float) -> float:
    """Per-decay Raman flip probability 1/(1 + C)."""
    if not cyclicity > 0:
        raise InvalidArgumentError(f"cyclicity must be > 0, got {cyclicity}")
    return 0.0 if math.isinf(cyclicity) else 1.0 / (1.0 + cyclicity)


def dephasing_probability(gamma: float, gamma_d: float) -> float:
    """Probability 2γd/(Γ + 2γd) of a random phase kick per photonic qubit."""
    if gamma < 0 or gamma_d < 0:
        raise InvalidArgumentError(f"rates must be >= 0, got gamma={gamma}, gamma_d={gamma_d}")
    if gamma_d == 0:
        return 0.0
    return 2.0 * gamma_d / (gamma + 2.0 * gamma_d)


def indistinguishability(gamma: float, gamma_d: float) -> float:
    """V_s = Γ/(Γ + 2γd)."""
    if gamma < 0 or gamma_d < 0 or gamma + gamma_d == 0:
        raise InvalidArgumentError(f"invalid rates gamma={gamma}, gamma_d={gamma_d}")
    return gamma / (gamma + 2.0 * gamma_d)


def derive_dephasing_rate(v_s: float, gamma: float) -> float:
    """
    Pure dephasing rate from the single-photon indistinguishability.

    γd = Γ(1/V_s − 1)/2.

    Example:
        >>> round(derive_dephasing_rate(0.968, 1 / 0.235), 3)
        0.07
    """
    if not 0.0 < v_s <= 1.0:
        raise InvalidArgumentError(f"v_s must lie in (0, 1], got {v_s}")
    if gamma < 0:
        raise InvalidArgumentError(f"gamma must be >= 0, got {gamma}")
    return gamma * (1.0 / v_s - 1.0) / 2.0


# =============================================================================
# Spin Channels
# =============================================================================


def apply_laser_spin_flip(
    state: JointState,
    p_f: float,
    rng: np.random.Generator,
    angle: float = math.pi,
    location: int = 0,
) -> JointState:
    """
    Instantaneous laser-induced spin reset after a rotation.

    With probability reset_probability(p_f, angle) the spin is measured in z
    (destroying its coherence) and repopulated as ↑ or ↓ with equal odds.
    The photon record is kept.
    """
    q = reset_probability(p_f, angle)
    if q == 0 or rng.random() >= q:
        return state
    p_up, p_down = state.spin_populations()
    measured = _UP if rng.random() * (p_up + p_down) < p_up else _DOWN
    state.project_spin(measured)
    new = _UP if rng.random() < 0.5 else _DOWN
    state.reset_spin(measured, new)
    state.events.append(
        ErrorEvent("laser_spin_flip", location, "up" if new == _UP else "down")
    )
    return state


def apply_offres_excitation(
    state: JointState,
    p_wrong: float,
    rng: np.random.Generator,
    location: int = 0,
) -> JointState:
    """
    Excitation of the unwanted transition from ↑, unravelled as a jump.

    The scattered photon has the wrong frequency and is filtered. The jump
    Kraus operator is √p_wrong |↑⟩⟨↑| and the no-jump operator is
    diag(√(1 − p_wrong), 1).
    """
    if not 0.0 <= p_wrong <= 1.0:
        raise InvalidArgumentError(f"p_wrong must lie in [0, 1], got {p_wrong}")
    if p_wrong == 0:
        return state
    p_up, _ = state.spin_populations()
    p_jump = p_wrong * p_up / state.norm2()
    if rng.random() < p_jump:
        state.project_spin(_UP)
        state.events.append(ErrorEvent("offres_excitation", location))
        return state
    keep = math.sqrt(1.0 - p_wrong)
    for v in state.branches.values():
        v[_UP] *= keep
    return state.prune().normalize()


def apply_raman_flip(
    state: JointState,
    cyclicity: float,
    rng: np.random.Generator,
    slot: int,
    time_bin: str,
    location: int = 0,
) -> JointState:
    """
    Raman decay ↓ → ↑ after an excitation, unravelled as a jump.

    Every photon emitted in (slot, time_bin) came from a decay that was
    spin-preserving with probability 1 − r, r = 1/(1 + C). The branch with k
    photons survives without a flip with amplitude (1 − r)^{k/2}; a flip
    turns the last of its photons into a filtered Raman photon and leaves
    the spin in ↑ with k − 1 target photons.
    """
    r = raman_probability(cyclicity)
    if r == 0:
        return state

    keep_amp: dict[Any, float] = {}
    p_jump = 0.0
    for key, v in state.branches.items():
        k = state.photon_count(key, slot, time_bin)
        if k == 0:
            continue
        survive = (1.0 - r) ** k
        keep_amp[key] = math.sqrt(survive)
        p_jump += abs(v[_DOWN]) ** 2 * (1.0 - survive)
    if not keep_amp:
        return state
    p_jump /= state.norm2()

    if rng.random() < p_jump:
        flipped: dict[Any, np.ndarray] = {}
        bin_idx = 0 if time_bin == "early" else 1
        for key, v in state.branches.items():
            k = key[slot][bin_idx]
            if k == 0 or v[_DOWN] == 0:
                continue
            counts = list(key[slot])
            counts[bin_idx] -= 1
            new_key = key[:slot] + (tuple(counts),) + key[slot + 1 :]
            amp = math.sqrt(1.0 - (1.0 - r) ** k) * v[_DOWN]
            vec = np.array([amp, 0.0], dtype=complex)
            flipped[new_key] = flipped[new_key] + vec if new_key in flipped else vec
        state.branches = flipped
        state.prune().normalize()
        state.events.append(ErrorEvent("raman_flip", location))
        return state

    for key, amp in keep_amp.items():
        state.branches[key][_DOWN] *= amp
    return state.prune().normalize()


def apply_pure_dephasing(
    state: JointState,
    gamma: float,
    gamma_d: float,
    rng: np.random.Generator,
    location: int = 0,
) -> JointState:
    """With probability 2γd/(Γ + 2γd), multiply ↓ by a uniform random phase."""
    p = dephasing_probability(gamma, gamma_d)
    if p == 0 or rng.random() >= p:
        return state
    phase = rng.uniform(0.0, 2 * math.pi)
    state.apply_phase(phase)
    state.events.append(ErrorEvent("pure_dephase", location, phase))
    return state


def apply_init_error(init_fidelity: float, rng: np.random.Generator) -> np.ndarray:
    """
    Initial spin vector: draw i ∈ [0, 1); i ≤ F_int gives ↑, otherwise ↓.

    Example:
        >>> apply_init_error(1.0, np.random.default_rng(0)).real
        array([1., 0.])
    """
    if not 0.0 <= init_fidelity <= 1.0:
        raise InvalidArgumentError(f"init_fidelity must lie in [0, 1], got {init_fidelity}")
    if init_fidelity == 1.0:
        return np.array([1.0, 0.0], dtype=complex)
    if rng.random() <= init_fidelity:
        return np.array([1.0, 0.0], dtype=complex)
    return np.array([0.0, 1.0], dtype=complex)


def apply_readout_error(bright: bool, readout_fidelity: float, rng: np.random.Generator) -> bool:
    """Flip the recorded readout outcome with probability 1 − F_r."""
    if not 0.0 <= readout_fidelity <= 1.0:
        raise InvalidArgumentError(
            f"readout_fidelity must lie in [0, 1], got {readout_fidelity}"
        )
    if readout_fidelity == 1.0:
        return bright
    if rng.random() >= readout_fidelity:
        return not bright
    return bright
