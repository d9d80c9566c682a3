"""
Bloch-excitation submodule.

Photon-number-resolved optical Bloch solver for the excitation pulses, the
off-resonant excitation probabilities of a scenario and the closed-form
off-resonant fidelity.
"""

from timebin_ghz.bloch._solver import (
    DECAY_WINDOW_LIFETIMES,
    GAUSSIAN_TRUNCATION,
    ExcitationOutcome,
    OffResonantOutcome,
    TwoLevelParams,
    closed_form_offres_fidelity,
    excitation_probability,
    ghz_to_angular,
    offres_excitation_probability,
    optimal_square_duration,
    solve_bloch,
)

__all__ = [
    "TwoLevelParams",
    "ExcitationOutcome",
    "OffResonantOutcome",
    "solve_bloch",
    "excitation_probability",
    "offres_excitation_probability",
    "optimal_square_duration",
    "closed_form_offres_fidelity",
    "ghz_to_angular",
    "GAUSSIAN_TRUNCATION",
    "DECAY_WINDOW_LIFETIMES",
]
