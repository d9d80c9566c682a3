"""
Timed pulse sequences for GHZ generation, spin echo and basis analysis.

A sequence is an ordered tuple of frozen event records. Rotations carry an
angle, a phase and a duration; excitations name the photonic slot and the
time bin they populate. Measurement settings are realised by editing the
trailing rotation of a generation sequence, the way the experiment does it.

Example:
    >>> from timebin_ghz.pulses import TimingConfig, build_ghz_sequence, total_rotation_time
    >>> seq = build_ghz_sequence(2, TimingConfig())
    >>> [event.kind for event in seq]
    ['rotation', 'excitation', 'rotation', 'excitation', 'rotation']
    >>> total_rotation_time(seq)
    4.0
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Union

import numpy as np

from timebin_ghz._errors import ConfigError, InvalidArgumentError

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
    "build_ghz_sequence",
    "build_experiment_cycle",
    "build_echo_sequence",
    "apply_setting",
    "measurement_settings",
    "analysis_phase",
    "total_rotation_time",
    "sequence_duration",
    "parse_sequence",
]

logger = logging.getLogger(__name__)

# Rotation axis of the protocol pulses (−y in the rotating frame).
PROTOCOL_PHASE = -math.pi / 2

_TIME_TOL = 1e-9


# =============================================================================
# Pulse Events
# =============================================================================


@dataclass(frozen=True)
class Rotation:
    """Coherent spin rotation R(angle, phase)."""

    start_time: float
    angle: float
    phase: float = PROTOCOL_PHASE
    duration: float = 0.0
    kind: str = field(default="rotation", init=False)

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration


@dataclass(frozen=True)
class Excitation:
    """Optical excitation of the cycling transition into one time bin."""

    start_time: float
    slot: int
    time_bin: str = "early"
    pulse_id: str = "p"
    kind: str = field(default="excitation", init=False)

    @property
    def end_time(self) -> float:
        return self.start_time

    def __post_init__(self) -> None:
        if self.time_bin not in ("early", "late"):
            raise InvalidArgumentError(f"time_bin must be 'early' or 'late', got '{self.time_bin}'")


@dataclass(frozen=True)
class ReadoutPump:
    start_time: float
    duration: float
    kind: str = field(default="readout", init=False)

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration


@dataclass(frozen=True)
class InitPump:
    start_time: float
    duration: float
    kind: str = field(default="init", init=False)

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration


@dataclass(frozen=True)
class NarrowingBlock:
    """Opaque nuclear-narrowing block: overlapped Raman and pump pulses."""

    start_time: float
    raman_duration: float
    pump_duration: float
    kind: str = field(default="narrowing", init=False)

    @property
    def duration(self) -> float:
        return max(self.raman_duration, self.pump_duration)

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration


PulseEvent = Union[Rotation, Excitation, ReadoutPump, InitPump, NarrowingBlock]

# Events that drive the optical transition and must not overlap.
_OPTICAL = ("excitation", "readout", "init", "narrowing")


# =============================================================================
# Configuration
# =============================================================================


@dataclass(frozen=True)
class TimingConfig:
    """Timing constants of the experimental cycle, in ns unless noted."""

    t_pi: float = 4.0
    echo_spacing: float = 29.0
    readout_duration: float = 200.0
    sequence_period: float = 1800.0
    repetition_rate: float = 5.6e5  # Hz
    narrowing_raman: float = 1100.0
    narrowing_pump: float = 1200.0

    def __post_init__(self) -> None:
        for name in (
            "t_pi",
            "echo_spacing",
            "readout_duration",
            "sequence_period",
            "repetition_rate",
            "narrowing_raman",
            "narrowing_pump",
        ):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigError(f"TimingConfig.{name} must be > 0, got {value}")
        if self.echo_spacing <= self.t_pi:
            raise ConfigError(
                f"echo_spacing ({self.echo_spacing} ns) must exceed t_pi ({self.t_pi} ns)"
            )

    @property
    def narrowing_duration(self) -> float:
        return max(self.narrowing_raman, self.narrowing_pump)

    def rotation_duration(self, angle: float) -> float:
        return abs(angle) / math.pi * self.t_pi

    @property
    def max_qubits(self) -> int:
        """
        Largest n whose GHZ sequence still fits the period after narrowing
        and before readout; 7 with the defaults. Below 2 nothing fits.
        """
        free = (
            self.sequence_period - self.narrowing_duration - self.readout_duration - self.t_pi
        )
        if free < 0:
            return 1
        return int((free + _TIME_TOL) // (2 * self.echo_spacing)) + 1


@dataclass(frozen=True)
class MeasurementSetting:
    """
    One analysis basis of the GHZ state.

    ``k == 0`` selects the z basis (P̂z); ``k in 1..n`` selects the M̂k
    equatorial basis with angle kπ/n for every photon. ``config`` picks which
    logical outcome is read as bright: 0 for logical 0 / |+_k⟩, 1 for
    logical 1 / |−_k⟩.
    """

    n: int
    k: int = 0
    config: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise InvalidArgumentError(f"MeasurementSetting needs n >= 2, got {self.n}")
        if not 0 <= self.k <= self.n:
            raise InvalidArgumentError(f"k must lie in 0..{self.n}, got {self.k}")
        if self.config not in (0, 1):
            raise InvalidArgumentError(f"config must be 0 or 1, got {self.config}")

    @property
    def is_z(self) -> bool:
        return self.k == 0

    @property
    def theta(self) -> float:
        """Equatorial angle kπ/n, wrapped to [0, 2π)."""
        return (self.k * math.pi / self.n) % (2 * math.pi)

    @property
    def label(self) -> str:
        return ("Pz" if self.is_z else f"M{self.k}") + ("+" if self.config == 0 else "-")

    @property
    def observable(self) -> str:
        return "Pz" if self.is_z else f"M{self.k}"


# =============================================================================
# Sequence Container
# =============================================================================


@dataclass(frozen=True)
class PulseSequence:
    """Time-ordered pulse events with a line-oriented text form."""

    events: tuple[PulseEvent, ...]

    def __post_init__(self) -> None:
        events = tuple(self.events)
        previous = -math.inf
        for event in events:
            if event.start_time < 0:
                raise InvalidArgumentError(f"Negative start time {event.start_time} for {event.kind}")
            if event.start_time < previous - _TIME_TOL:
                raise InvalidArgumentError("Pulse events must be sorted by start_time")
            previous = event.start_time
        optical = [e for e in events if e.kind in _OPTICAL]
        for first, second in zip(optical, optical[1:]):
            if second.start_time < first.end_time - _TIME_TOL:
                raise InvalidArgumentError(
                    f"Optical events overlap: {first.kind} ending at {first.end_time} ns "
                    f"and {second.kind} starting at {second.start_time} ns"
                )
        object.__setattr__(self, "events", events)

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, idx):
        return self.events[idx]

    @property
    def rotations(self) -> list[Rotation]:
        return [e for e in self.events if isinstance(e, Rotation)]

    @property
    def excitations(self) -> list[Excitation]:
        return [e for e in self.events if isinstance(e, Excitation)]

    @property
    def n_slots(self) -> int:
        slots = {e.slot for e in self.excitations}
        return len(slots)

    def shifted(self, offset: float) -> PulseSequence:
        return PulseSequence(tuple(replace(e, start_time=e.start_time + offset) for e in self.events))

    def to_text(self) -> str:
        """Serialize one event per line: ``kind start_ns key=value ...``."""
        lines = ["# kind start_ns params"]
        for event in self.events:
            lines.append(_event_to_line(event))
        return "\n".join(lines) + "\n"


def _fmt(value: float) -> str:
    return repr(float(value))


def _event_to_line(event: PulseEvent) -> str:
    head = f"{event.kind} {_fmt(event.start_time)}"
    if isinstance(event, Rotation):
        return f"{head} angle={_fmt(event.angle)} phase={_fmt(event.phase)} duration={_fmt(event.duration)}"
    if isinstance(event, Excitation):
        return f"{head} slot={event.slot} bin={event.time_bin} pulse={event.pulse_id}"
    if isinstance(event, NarrowingBlock):
        return f"{head} raman={_fmt(event.raman_duration)} pump={_fmt(event.pump_duration)}"
    return f"{head} duration={_fmt(event.duration)}"


def parse_sequence(text: str) -> PulseSequence:
    """
    Parse the text form written by ``PulseSequence.to_text``.

    Blank lines and ``#`` comments are ignored.
    """
    events: list[PulseEvent] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise InvalidArgumentError(f"Line {lineno}: expected 'kind start_ns ...', got '{raw}'")
        kind, start = parts[0], float(parts[1])
        try:
            params = dict(item.split("=", 1) for item in parts[2:])
        except ValueError:
            raise InvalidArgumentError(f"Line {lineno}: malformed parameter in '{raw}'") from None
        try:
            if kind == "rotation":
                events.append(
                    Rotation(
                        start,
                        angle=float(params["angle"]),
                        phase=float(params.get("phase", PROTOCOL_PHASE)),
                        duration=float(params.get("duration", 0.0)),
                    )
                )
            elif kind == "excitation":
                events.append(
                    Excitation(
                        start,
                        slot=int(params["slot"]),
                        time_bin=params.get("bin", "early"),
                        pulse_id=params.get("pulse", "p"),
                    )
                )
            elif kind == "readout":
                events.append(ReadoutPump(start, duration=float(params["duration"])))
            elif kind == "init":
                events.append(InitPump(start, duration=float(params["duration"])))
            elif kind == "narrowing":
                events.append(
                    NarrowingBlock(start, raman_duration=float(params["raman"]), pump_duration=float(params["pump"]))
                )
            else:
                raise InvalidArgumentError(f"Line {lineno}: unknown event kind '{kind}'")
        except KeyError as missing:
            raise InvalidArgumentError(f"Line {lineno}: missing parameter {missing} for {kind}") from None
    return PulseSequence(tuple(events))


# =============================================================================
# Rotation Algebra
# =============================================================================


def rotation_matrix(angle: float, phase: float) -> np.ndarray:
    """
    R(θ, φ) = cos(θ/2)·I − i·sin(θ/2)(cos φ σx + sin φ σy) in the (↑, ↓) basis.

    Example:
        >>> rotation_matrix(np.pi, -np.pi / 2).real.round(12)
        array([[ 0.,  1.],
               [-1.,  0.]])
    """
    c = math.cos(angle / 2)
    s = math.sin(angle / 2)
    return np.array(
        [
            [c, -1j * s * np.exp(-1j * phase)],
            [-1j * s * np.exp(1j * phase), c],
        ],
        dtype=complex,
    )


def analysis_phase(k: int, n: int, config: int = 0) -> float:
    """
    Phase of the π/2 analysis pulse that maps |+_k⟩ (config 0) or |−_k⟩
    (config 1) of the logical spin onto the bright state ↓.

    The logical spin is referenced to the frame before the final π-pulse,
    so the target eigenstate is first pulled back through that pulse.
    """
    alpha = k * math.pi / n
    # Logical |0⟩ ↔ ↓, |1⟩ ↔ ↑ after the final π.
    plus_logical = np.array([np.exp(1j * alpha), 1.0], dtype=complex) / math.sqrt(2)
    final_pi = rotation_matrix(math.pi, PROTOCOL_PHASE)
    a_up, a_down = final_pi.conj().T @ plus_logical
    phase = math.pi / 2 - float(np.angle(a_up / a_down))
    if config == 1:
        phase += math.pi
    return phase % (2 * math.pi)


# =============================================================================
# Builders
# =============================================================================


def build_ghz_sequence(n: int, timing: TimingConfig | None = None) -> PulseSequence:
    """
    Build the GHZ generation sequence for n qubits (spin plus n−1 photons).

    Emits π/2, then n−1 repetitions of [excite early, π, excite late, π].
    Rotation pulses start every ``echo_spacing`` ns; each excitation sits in
    the middle of the free-evolution gap between two rotations.

    Args:
        n: Total number of qubits, at least 2
        timing: Timing constants (defaults to TimingConfig())

    Returns:
        PulseSequence starting at t = 0

    Raises:
        ConfigError: If narrowing, generation and readout exceed the period,
            i.e. n > timing.max_qubits
    """
    timing = timing or TimingConfig()
    if n < 2:
        raise InvalidArgumentError(f"GHZ sequence needs n >= 2, got {n}")

    events: list[PulseEvent] = []
    spacing = timing.echo_spacing
    rot_index = 0

    def add_rotation(angle: float) -> Rotation:
        nonlocal rot_index
        rot = Rotation(rot_index * spacing, angle=angle, duration=timing.rotation_duration(angle))
        rot_index += 1
        events.append(rot)
        return rot

    def add_excitation(after: Rotation, slot: int, time_bin: str) -> None:
        midpoint = (after.end_time + rot_index * spacing) / 2
        events.append(Excitation(midpoint, slot=slot, time_bin=time_bin))

    last = add_rotation(math.pi / 2)
    for slot in range(n - 1):
        add_excitation(last, slot, "early")
        last = add_rotation(math.pi)
        add_excitation(last, slot, "late")
        last = add_rotation(math.pi)

    sequence = PulseSequence(tuple(events))
    cycle = timing.narrowing_duration + sequence_duration(sequence) + timing.readout_duration
    if cycle > timing.sequence_period + _TIME_TOL:
        raise ConfigError(
            f"n={n} needs a {cycle:.1f} ns cycle, longer than sequence_period "
            f"{timing.sequence_period} ns (at most n={timing.max_qubits})"
        )
    logger.debug("Built GHZ sequence n=%d: %d events, cycle %.1f ns", n, len(sequence), cycle)
    return sequence


def build_experiment_cycle(
    n: int, timing: TimingConfig | None = None, setting: MeasurementSetting | None = None
) -> PulseSequence:
    """Full cycle: narrowing block (its pump initializes), GHZ protocol, readout."""
    timing = timing or TimingConfig()
    ghz = build_ghz_sequence(n, timing)
    if setting is not None:
        ghz = apply_setting(ghz, setting, timing)
    narrowing = NarrowingBlock(0.0, timing.narrowing_raman, timing.narrowing_pump)
    body = ghz.shifted(narrowing.end_time)
    readout = ReadoutPump(body[-1].end_time, timing.readout_duration)
    return PulseSequence((narrowing, *body.events, readout))


def build_echo_sequence(
    spacing: float,
    n_pi: int = 1,
    phase_last: float = 0.0,
    t_pi: float = 4.0,
) -> PulseSequence:
    """
    Spin-echo sequence π/2 − (π)×n_pi − π/2.

    The first π/2 starts at t = 0, the π-pulses at spacing, 3·spacing, ...
    and the closing π/2 at 2·n_pi·spacing with its phase shifted by
    ``phase_last``.

    Example:
        >>> [e.start_time for e in build_echo_sequence(29.0)]
        [0.0, 29.0, 58.0]
    """
    if not spacing > 0:
        raise InvalidArgumentError(f"Echo spacing must be > 0, got {spacing}")
    if n_pi not in (1, 3):
        raise InvalidArgumentError(f"n_pi must be 1 or 3, got {n_pi}")
    half = t_pi / 2
    events: list[PulseEvent] = [Rotation(0.0, math.pi / 2, duration=half)]
    for i in range(n_pi):
        events.append(Rotation((2 * i + 1) * spacing, math.pi, duration=t_pi))
    events.append(
        Rotation(2 * n_pi * spacing, math.pi / 2, phase=PROTOCOL_PHASE + phase_last, duration=half)
    )
    return PulseSequence(tuple(events))


def apply_setting(
    sequence: PulseSequence, setting: MeasurementSetting, timing: TimingConfig | None = None
) -> PulseSequence:
    """
    Realise a measurement setting on a generation sequence.

    Z basis, config 0 keeps the sequence; config 1 appends an extra π. An
    equatorial setting replaces the final π by a π/2 analysis pulse.
    """
    timing = timing or TimingConfig()
    events = list(sequence.events)
    rot_positions = [i for i, e in enumerate(events) if isinstance(e, Rotation)]
    if not rot_positions:
        raise InvalidArgumentError("Sequence has no rotation to analyse")
    last_idx = rot_positions[-1]
    last = events[last_idx]
    if setting.is_z:
        if setting.config == 1:
            events.append(
                Rotation(last.end_time, math.pi, duration=timing.rotation_duration(math.pi))
            )
    else:
        angle = math.pi / 2
        events[last_idx] = Rotation(
            last.start_time,
            angle,
            phase=analysis_phase(setting.k, setting.n, setting.config),
            duration=timing.rotation_duration(angle),
        )
    return PulseSequence(tuple(events))


def measurement_settings(n: int) -> list[MeasurementSetting]:
    """Both configurations of P̂z and of every M̂k, in that order."""
    return [MeasurementSetting(n, k, config) for k in range(n + 1) for config in (0, 1)]


# =============================================================================
# Sequence Metrics
# =============================================================================


def sequence_duration(sequence: Iterable[PulseEvent]) -> float:
    events = list(sequence)
    if not events:
        return 0.0
    return max(e.end_time for e in events) - min(e.start_time for e in events)


def total_rotation_time(sequence: Iterable[PulseEvent], t_pi: float = 4.0) -> float:
    """
    Rotation time that acts while photonic coherence is being built.

    Counts rotations (as angle/π × t_pi) strictly between the first and the
    last excitation. Without excitations every rotation counts. For the GHZ
    sequence this is (2n − 3)·t_pi.
    """
    events = list(sequence)
    rotations = [e for e in events if isinstance(e, Rotation)]
    excitations = [e for e in events if isinstance(e, Excitation)]
    if excitations:
        first = min(e.start_time for e in excitations)
        last = max(e.start_time for e in excitations)
        rotations = [r for r in rotations if first < r.start_time < last]
    return float(sum(abs(r.angle) / math.pi * t_pi for r in rotations))
