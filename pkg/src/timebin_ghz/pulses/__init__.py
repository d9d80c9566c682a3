"""
Pulse-protocol submodule.

Builders for the GHZ generation cycle, spin-echo sequences and the
measurement-basis variants, plus the line-oriented sequence text format.
"""

from timebin_ghz.pulses._sequence import (
    PROTOCOL_PHASE,
    Excitation,
    InitPump,
    MeasurementSetting,
    NarrowingBlock,
    PulseEvent,
    PulseSequence,
    ReadoutPump,
    Rotation,
    TimingConfig,
    analysis_phase,
    apply_setting,
    build_echo_sequence,
    build_experiment_cycle,
    build_ghz_sequence,
    measurement_settings,
    parse_sequence,
    rotation_matrix,
    sequence_duration,
    total_rotation_time,
)

__all__ = [
    "Rotation",
    "Excitation",
    "ReadoutPump",
    "InitPump",
    "NarrowingBlock",
    "PulseEvent",
    "PulseSequence",
    "TimingConfig",
    "MeasurementSetting",
    "PROTOCOL_PHASE",
    "rotation_matrix",
    "analysis_phase",
    "build_ghz_sequence",
    "build_experiment_cycle",
    "build_echo_sequence",
    "apply_setting",
    "measurement_settings",
    "total_rotation_time",
    "sequence_duration",
    "parse_sequence",
]
