"""
Error-channels submodule.

Scenario presets and the stochastic error channels of a trajectory:
initialization, readout, Raman and laser-induced spin flips, off-resonant
excitation and phonon pure dephasing.
"""

from timebin_ghz.channels._channels import (
    ERROR_KINDS,
    ErrorEvent,
    apply_init_error,
    apply_laser_spin_flip,
    apply_offres_excitation,
    apply_pure_dephasing,
    apply_raman_flip,
    apply_readout_error,
    dephasing_probability,
    derive_dephasing_rate,
    indistinguishability,
    raman_probability,
    reset_probability,
    spin_flip_probability,
)
from timebin_ghz.channels._scenario import (
    ERROR_SOURCES,
    PRESETS_PATH,
    ScenarioConfig,
    get_preset,
    load_scenarios,
    preset_names,
)

__all__ = [
    "ScenarioConfig",
    "ERROR_SOURCES",
    "PRESETS_PATH",
    "load_scenarios",
    "get_preset",
    "preset_names",
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
