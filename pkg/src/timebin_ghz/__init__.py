"""
timebin-ghz: time-bin GHZ states from a quantum-dot spin.

Monte Carlo error model of the spin-photon GHZ protocol, analytic
single-error fidelity oracles, the nuclear-noise spin-echo model and the
fitting routines used to characterise the emitter.

Basic usage:
    >>> from timebin_ghz import simulate
    >>> simulate("ideal", n=3, shots=1000).fidelity.value
    1.0

Per-module usage:
    >>> from timebin_ghz.quantum import ghz_target, DensityMatrix, fidelity_decomposition
    >>> round(fidelity_decomposition(DensityMatrix.from_pure(ghz_target(2)), 2).pz, 12)
    1.0

    >>> from timebin_ghz.channels import get_preset
    >>> get_preset("gaas").nuclear_noise_enabled
    False
"""

from timebin_ghz._errors import (
    ConfigError,
    DomainError,
    EstimationError,
    FitError,
    InvalidArgumentError,
    NumericError,
    TimebinGHZError,
)
from timebin_ghz.channels import ScenarioConfig, get_preset, load_scenarios
from timebin_ghz.montecarlo import (
    RunResult,
    analytic_oracle,
    error_budget,
    estimate_fidelity,
    extrapolate,
)
from timebin_ghz.pulses import MeasurementSetting, TimingConfig, build_ghz_sequence
from timebin_ghz.quantum import fidelity_decomposition, ghz_target

__version__ = "0.1.0"
__all__ = [
    "simulate",
    "ScenarioConfig",
    "get_preset",
    "load_scenarios",
    "TimingConfig",
    "MeasurementSetting",
    "build_ghz_sequence",
    "RunResult",
    "estimate_fidelity",
    "analytic_oracle",
    "error_budget",
    "extrapolate",
    "ghz_target",
    "fidelity_decomposition",
    "TimebinGHZError",
    "InvalidArgumentError",
    "ConfigError",
    "NumericError",
    "DomainError",
    "FitError",
    "EstimationError",
]


def simulate(
    scenario: str | ScenarioConfig = "inas-current",
    n: int = 3,
    shots: int = 10_000,
    seed: int = 0,
    threads: int = 1,
) -> RunResult:
    """
    Estimate the GHZ fidelity of a preset or custom scenario.

    Args:
        scenario: Preset name or ScenarioConfig
        n: Total number of qubits (spin plus n − 1 photons)
        shots: Shots per measurement setting
        seed: Root seed; equal seeds give identical results
        threads: Worker processes

    Returns:
        RunResult with ⟨P̂z⟩, ⟨M̂k⟩, ⟨χ̂⟩ and F
    """
    if isinstance(scenario, str):
        scenario = get_preset(scenario)
    return estimate_fidelity(scenario, n, shots, seed, threads=threads)
