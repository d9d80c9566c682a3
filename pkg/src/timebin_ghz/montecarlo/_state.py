"""
Joint spin ⊗ time-bin state of one Monte Carlo trajectory.

The state is a sparse superposition keyed by the photon record: each key
holds, for every photonic slot, the number of photons in the early and in
the late bin. The value is the (unnormalized) spin vector in the (↑, ↓)
basis that accompanies that record.

Photons that are emitted but never detected stay in the key, so records
that differ only in leftover photons are orthogonal and add incoherently
when probabilities are taken. That is the partial trace over undetected
light.

Example:
    >>> import numpy as np
    >>> from timebin_ghz.montecarlo import JointState
    >>> state = JointState.vacuum(1, np.array([0.0, 1.0]))
    >>> _ = state.emit(0, "early", [0.0, 1.0, 0.0])
    >>> list(state.branches)
    [((1, 0),)]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

import numpy as np

from timebin_ghz._errors import InvalidArgumentError, NumericError

if TYPE_CHECKING:
    from timebin_ghz.channels import ErrorEvent

__all__ = ["JointState", "SlotKey", "UP", "DOWN"]

SlotKey = tuple[tuple[int, int], ...]

UP = 0
DOWN = 1

_BIN_INDEX = {"early": 0, "late": 1}
_PRUNE_TOL = 1e-30


def _bin_index(time_bin: str) -> int:
    try:
        return _BIN_INDEX[time_bin]
    except KeyError:
        raise InvalidArgumentError(
            f"time_bin must be 'early' or 'late', got '{time_bin}'"
        ) from None


def _with_count(key: SlotKey, slot: int, bin_idx: int, delta: int) -> SlotKey:
    counts = list(key[slot])
    counts[bin_idx] += delta
    return key[:slot] + (tuple(counts),) + key[slot + 1 :]


@dataclass
class JointState:
    """Sparse spin ⊗ photon-record state with a post-selection weight."""

    n_slots: int
    branches: dict[SlotKey, np.ndarray]
    weight: float = 1.0
    events: list[ErrorEvent] = field(default_factory=list)

    @classmethod
    def vacuum(cls, n_slots: int, spin: Iterable[complex]) -> JointState:
        """No photons in any slot; spin vector given in the (↑, ↓) basis."""
        if n_slots < 0:
            raise InvalidArgumentError(f"n_slots must be >= 0, got {n_slots}")
        vec = np.asarray(list(spin), dtype=complex)
        if vec.shape != (2,):
            raise InvalidArgumentError(f"spin must have two components, got {vec.shape}")
        key: SlotKey = ((0, 0),) * n_slots
        state = cls(n_slots=n_slots, branches={key: vec.copy()})
        state.normalize()
        return state

    # -------------------------------------------------------------------------
    # Norms and populations
    # -------------------------------------------------------------------------

    def norm2(self) -> float:
        return float(sum(np.vdot(v, v).real for v in self.branches.values()))

    def normalize(self) -> JointState:
        norm2 = self.norm2()
        if not norm2 > 0:
            raise NumericError("Cannot normalize a zero joint state", {"norm2": norm2})
        scale = 1.0 / math.sqrt(norm2)
        for key in self.branches:
            self.branches[key] = self.branches[key] * scale
        return self

    def prune(self) -> JointState:
        self.branches = {
            k: v for k, v in self.branches.items() if np.vdot(v, v).real > _PRUNE_TOL
        }
        return self

    def spin_populations(self) -> tuple[float, float]:
        """(P↑, P↓) summed over all photon records."""
        up = sum(abs(v[UP]) ** 2 for v in self.branches.values())
        down = sum(abs(v[DOWN]) ** 2 for v in self.branches.values())
        return float(up), float(down)

    def spin_density_matrix(self) -> np.ndarray:
        """Reduced spin state with the photon record traced out."""
        rho = np.zeros((2, 2), dtype=complex)
        for v in self.branches.values():
            rho += np.outer(v, v.conj())
        return rho

    @property
    def coherence_alive(self) -> bool:
        """False once a laser-induced reset has replaced the spin."""
        return not any(e.kind == "laser_spin_flip" for e in self.events)

    def photon_count(self, key: SlotKey, slot: int, time_bin: str) -> int:
        return key[slot][_bin_index(time_bin)]

    # -------------------------------------------------------------------------
    # Spin operations
    # -------------------------------------------------------------------------

    def apply_spin_unitary(self, matrix: np.ndarray) -> JointState:
        for key, v in self.branches.items():
            self.branches[key] = matrix @ v
        return self

    def apply_phase(self, phase: float) -> JointState:
        """Multiply the ↓ component by e^{iφ}."""
        factor = np.exp(1j * phase)
        for v in self.branches.values():
            v[DOWN] *= factor
        return self

    def project_spin(self, component: int) -> float:
        """
        Project the spin onto ↑ (0) or ↓ (1) and renormalize.

        Returns:
            Probability of the projected outcome before renormalization
        """
        if component not in (UP, DOWN):
            raise InvalidArgumentError(f"component must be 0 or 1, got {component}")
        probability = self.spin_populations()[component]
        for v in self.branches.values():
            v[1 - component] = 0.0
        self.prune()
        if probability > 0:
            self.normalize()
        return probability

    def reset_spin(self, measured: int, new: int) -> JointState:
        """After projecting onto ``measured``, move that amplitude onto ``new``."""
        if measured == new:
            return self
        for v in self.branches.values():
            v[new], v[measured] = v[measured], 0.0
        return self

    # -------------------------------------------------------------------------
    # Photon operations
    # -------------------------------------------------------------------------

    def emit(self, slot: int, time_bin: str, amplitudes: Iterable[float]) -> JointState:
        """
        Coherent emission by the ↓ component into one time bin.

        ``amplitudes[k]`` multiplies the branch that emitted k photons; the
        ↑ component is unaffected.
        """
        if not 0 <= slot < self.n_slots:
            raise InvalidArgumentError(f"slot must lie in 0..{self.n_slots - 1}, got {slot}")
        bin_idx = _bin_index(time_bin)
        amps = list(amplitudes)
        updated: dict[SlotKey, np.ndarray] = {}

        def add(key: SlotKey, vec: np.ndarray) -> None:
            if key in updated:
                updated[key] = updated[key] + vec
            else:
                updated[key] = vec

        for key, v in self.branches.items():
            add(key, np.array([v[UP], 0.0], dtype=complex))
            for k, amp in enumerate(amps):
                if amp == 0:
                    continue
                add(_with_count(key, slot, bin_idx, k), np.array([0.0, amp * v[DOWN]]))
        self.branches = updated
        return self.prune()

    def annihilate(self, slot: int, c_early: complex, c_late: complex) -> JointState:
        """
        Return (c_e·a_e + c_l·a_l)|ψ⟩ for one slot as a new, unnormalized state.

        a|n⟩ = √n|n−1⟩; the weight and event log are carried over.
        """
        updated: dict[SlotKey, np.ndarray] = {}
        for key, v in self.branches.items():
            n_early, n_late = key[slot]
            for bin_idx, count, coeff in ((0, n_early, c_early), (1, n_late, c_late)):
                if count == 0 or coeff == 0:
                    continue
                new_key = _with_count(key, slot, bin_idx, -1)
                vec = coeff * math.sqrt(count) * v
                updated[new_key] = updated[new_key] + vec if new_key in updated else vec
        return JointState(self.n_slots, updated, self.weight, list(self.events)).prune()

    def copy(self) -> JointState:
        return JointState(
            self.n_slots,
            {k: v.copy() for k, v in self.branches.items()},
            self.weight,
            list(self.events),
        )
