"""
Nuclear-noise submodule.

Overhauser-field phase noise sampled from a discretized PSD, spin-echo
visibility (Monte Carlo and exact Bessel average), the synthetic nuclear
spectrum and the amplitude fit.
"""

from timebin_ghz.nuclear._noise import (
    DEFAULT_AMPLITUDE,
    DEFAULT_PEAK_WEIGHTS,
    GYROMAGNETIC_MHZ_PER_T,
    VISIBILITY_CAP,
    AmplitudeFit,
    EchoResult,
    NoiseRealization,
    NoiseSpectrum,
    accumulate_phase,
    default_spectrum,
    echo_curve,
    echo_intervals,
    echo_visibility,
    expected_echo_visibility,
    fit_amplitude,
    load_spectrum,
    sample_realization,
    save_spectrum,
)

__all__ = [
    "NoiseSpectrum",
    "NoiseRealization",
    "EchoResult",
    "AmplitudeFit",
    "GYROMAGNETIC_MHZ_PER_T",
    "DEFAULT_PEAK_WEIGHTS",
    "DEFAULT_AMPLITUDE",
    "VISIBILITY_CAP",
    "sample_realization",
    "accumulate_phase",
    "echo_intervals",
    "echo_visibility",
    "expected_echo_visibility",
    "echo_curve",
    "default_spectrum",
    "fit_amplitude",
    "load_spectrum",
    "save_spectrum",
]
