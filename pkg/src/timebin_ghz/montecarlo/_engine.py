"""
Monte Carlo estimation of GHZ fidelities by click sampling.

Every shot runs one trajectory through a measurement-setting variant of the
generation sequence, then samples photon clicks slot by slot and the spin
readout. A shot is accepted when every slot holds a photon to detect and the
readout reports bright. Its weight is the product of the per-slot detection
totals, so a slot with one early and one late photon counts twice and an
empty slot rejects the shot.

Shot i of setting s always draws from
``default_rng(SeedSequence(seed, spawn_key=(s, i)))``; results do not depend
on how shots are split across worker processes.

Example:
    >>> from timebin_ghz.channels import get_preset
    >>> from timebin_ghz.montecarlo import estimate_fidelity
    >>> result = estimate_fidelity(get_preset("ideal"), 2, shots=1000, rng_seed=1)
    >>> result.fidelity.value
    1.0
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

from timebin_ghz._errors import (
    ConfigError,
    EstimationError,
    FitError,
    InvalidArgumentError,
)
from timebin_ghz.bloch import closed_form_offres_fidelity, offres_excitation_probability
from timebin_ghz.channels import (
    ErrorEvent,
    ScenarioConfig,
    apply_init_error,
    apply_laser_spin_flip,
    apply_offres_excitation,
    apply_pure_dephasing,
    apply_raman_flip,
    apply_readout_error,
    spin_flip_probability,
)
from timebin_ghz.montecarlo._state import DOWN, JointState
from timebin_ghz.nuclear import (
    NoiseSpectrum,
    accumulate_phase,
    default_spectrum,
    sample_realization,
)
from timebin_ghz.pulses import (
    Excitation,
    MeasurementSetting,
    PulseSequence,
    Rotation,
    TimingConfig,
    build_experiment_cycle,
    measurement_settings,
    rotation_matrix,
)
from timebin_ghz.quantum import fidelity_from_expectations

__all__ = [
    "ChannelRates",
    "ShotRecord",
    "Estimate",
    "SettingSummary",
    "RunResult",
    "BudgetRow",
    "ExtrapolationFit",
    "SweepRow",
    "OutlookResult",
    "BUDGET_SOURCES",
    "ORACLE_CHANNELS",
    "SWEEP_ORACLES",
    "DEFAULT_SHOTS",
    "MIN_SHOTS",
    "run_trajectory",
    "weighted_estimate",
    "estimate_fidelity",
    "analytic_oracle",
    "scenario_oracle",
    "error_budget",
    "extrapolate",
    "sweep",
    "outlook",
]

logger = logging.getLogger(__name__)

DEFAULT_SHOTS = 10_000
MIN_SHOTS = 1_000
CHUNK_SIZE = 250

# Leave-one-out rows, largest contribution first.
BUDGET_SOURCES = (
    "off_resonant",
    "nuclear",
    "spin_flip",
    "readout",
    "dephasing",
    "cyclicity",
)

ORACLE_CHANNELS = (
    "cyclicity",
    "spin_flip",
    "spin_flip_first_order",
    "init",
    "readout",
    "dephasing",
    "offres",
)

# Scenario field → oracle channel used for the sweep overlay.
SWEEP_ORACLES = {
    "cyclicity": "cyclicity",
    "q_factor": "spin_flip",
    "init_fidelity": "init",
    "readout_fidelity": "readout",
    "dephasing_rate": "dephasing",
    "cycling_splitting_ghz": "offres",
}

_SOURCE_CHANNEL = {
    "cyclicity": "cyclicity",
    "spin_flip": "spin_flip",
    "initialization": "init",
    "readout": "readout",
    "dephasing": "dephasing",
    "off_resonant": "offres",
}

_DETECTION_TOL = 1e-15
_MAX_EXTRAPOLATION = 1000


# =============================================================================
# Data Classes
# =============================================================================


@dataclass(frozen=True)
class ChannelRates:
    """Per-pulse probabilities derived once from a scenario."""

    emission: tuple[float, float, float]
    p_wrong: float
    p_f: float

    @classmethod
    def from_scenario(cls, scenario: ScenarioConfig) -> ChannelRates:
        """
        Solve the excitation dynamics of the scenario.

        With off-resonant errors disabled the unwanted transition is never
        excited and re-excitation is folded into single emission; the
        no-photon probability only lowers the rate. ``reexcitation_enabled``
        alone folds re-excitation and keeps the unwanted transition.
        """
        offres = offres_excitation_probability(scenario)
        p0, p1, p2 = (float(p) for p in offres.target.as_array())
        total = p0 + p1 + p2
        p0, p1, p2 = p0 / total, p1 / total, p2 / total
        p_wrong = 0.0
        if scenario.off_resonant_enabled:
            p_wrong = min(max(offres.p_wrong, 0.0), 1.0)
        if not (scenario.off_resonant_enabled and scenario.reexcitation_enabled):
            p1, p2 = p1 + p2, 0.0
        return cls(
            emission=(math.sqrt(p0), math.sqrt(p1), math.sqrt(p2)),
            p_wrong=p_wrong,
            p_f=spin_flip_probability(scenario.q_factor),
        )


@dataclass(frozen=True)
class ShotRecord:
    """
    Outcome of one shot.

    ``bits`` lists the spin first, then the photons in slot order: logical
    0/1 in the z basis, ±1 in an equatorial basis. Rejected shots have
    weight 0 and no bits.
    """

    setting: int
    bits: tuple[int, ...]
    weight: float
    events: tuple[ErrorEvent, ...] = ()

    @property
    def accepted(self) -> bool:
        return self.weight > 0

    def outcome_string(self, equatorial: bool = False) -> str:
        """Bits as "011" (z basis) or "+-+" (equatorial); empty when rejected."""
        if equatorial:
            return "".join("+" if b > 0 else "-" for b in self.bits)
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class Estimate:
    value: float
    std_err: float

    def to_dict(self) -> dict[str, float]:
        return {"value": self.value, "std_err": self.std_err}


@dataclass(frozen=True)
class SettingSummary:
    label: str
    observable: str
    shots: int
    accepted: int
    weight_sum: float
    estimate: Estimate

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.shots if self.shots else 0.0


@dataclass(frozen=True)
class RunResult:
    """Post-selected estimates of one scenario at one qubit number."""

    scenario: ScenarioConfig
    n: int
    seed: int
    pz: Estimate
    mk: tuple[Estimate, ...]
    chi: Estimate
    fidelity: Estimate
    shots_total: int
    shots_accepted: int
    settings: tuple[SettingSummary, ...]
    records: tuple[ShotRecord, ...] = field(default=(), repr=False)

    @property
    def acceptance_rate(self) -> float:
        return self.shots_accepted / self.shots_total if self.shots_total else 0.0

    def to_dict(self) -> dict[str, Any]:
        """JSON summary: estimates, errors, acceptance and the scenario echo."""
        return {
            "scenario": _jsonable(self.scenario.to_dict()),
            "n": self.n,
            "seed": self.seed,
            "pz": self.pz.to_dict(),
            "mk": [m.to_dict() for m in self.mk],
            "chi": self.chi.to_dict(),
            "fidelity": self.fidelity.to_dict(),
            "shots_total": self.shots_total,
            "shots_accepted": self.shots_accepted,
            "settings": [
                {
                    "label": s.label,
                    "observable": s.observable,
                    "shots": s.shots,
                    "accepted": s.accepted,
                    "acceptance_rate": s.acceptance_rate,
                    "weight_sum": s.weight_sum,
                    **s.estimate.to_dict(),
                }
                for s in self.settings
            ],
        }

    def write_json(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")
        return path

    def write_records_csv(self, path: str | Path) -> Path:
        """One row per shot: setting label, outcome, weight."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        labels = [s.label for s in self.settings]
        equatorial = [s.observable != "Pz" for s in self.settings]
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["setting", "outcome", "weight"])
            for rec in self.records:
                writer.writerow(
                    [
                        labels[rec.setting],
                        rec.outcome_string(equatorial[rec.setting]),
                        repr(rec.weight),
                    ]
                )
        return path


@dataclass(frozen=True)
class BudgetRow:
    source: str
    infidelity: float
    std_err: float
    fidelity_without: float


@dataclass(frozen=True)
class ExtrapolationFit:
    """
    F(N) = ½ + a·bᴺ over the photon number N.

    ``n_max`` counts qubits (photons plus the spin) and is None when the
    data do not decay or the bound is not reached.
    """

    a: float
    b: float
    covariance: np.ndarray = field(repr=False)
    n_max: int | None
    decaying: bool
    points: tuple[tuple[int, float, float], ...] = field(default=(), repr=False)

    @property
    def per_photon_infidelity(self) -> float:
        return 1.0 - self.b

    def predict(self, n_photons: int | float) -> tuple[float, float]:
        """Fidelity and its one-sigma uncertainty from the fit covariance."""
        value = 0.5 + self.a * self.b**n_photons
        grad = np.array(
            [self.b**n_photons, self.a * n_photons * self.b ** (n_photons - 1)]
        )
        var = float(grad @ self.covariance @ grad)
        return value, math.sqrt(max(var, 0.0))


@dataclass(frozen=True)
class SweepRow:
    value: float
    fidelity: float
    std_err: float
    oracle: float | None


@dataclass(frozen=True)
class OutlookResult:
    results: dict[int, RunResult]
    fit: ExtrapolationFit


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


# =============================================================================
# Trajectory
# =============================================================================


def _detection_operators(setting: MeasurementSetting) -> list[tuple[int, complex, complex]]:
    """(outcome, c_early, c_late) of the click operators of one photonic slot."""
    if setting.is_z:
        return [(0, 1.0, 0.0), (1, 0.0, 1.0)]
    phase = np.exp(-1j * setting.theta)
    r = 1 / math.sqrt(2)
    return [(1, r, r * phase), (-1, r, -r * phase)]


def _spin_bit(setting: MeasurementSetting) -> int:
    if setting.is_z:
        return setting.config
    return 1 if setting.config == 0 else -1


def run_trajectory(
    sequence: PulseSequence,
    scenario: ScenarioConfig,
    setting: MeasurementSetting,
    rng: np.random.Generator,
    *,
    rates: ChannelRates | None = None,
    spectrum: NoiseSpectrum | None = None,
    setting_index: int = 0,
) -> ShotRecord:
    """
    Simulate one shot of ``sequence`` and sample its clicks.

    Rotations accrue nuclear phase since the previous pulse event, then act.
    Those between the first and last excitation may then reset the spin. Excitations apply off-resonant excitation, the
    coherent emission, Raman flips and (after a late bin) pure dephasing.

    Args:
        sequence: Generation sequence already edited for ``setting``
        scenario: Physical parameters
        setting: Measurement basis and readout configuration
        rng: Generator owned by this shot
        rates: Precomputed per-pulse probabilities (derived if omitted)
        spectrum: Nuclear PSD (the default synthetic one if omitted)
        setting_index: Stored on the record

    Returns:
        ShotRecord; a rejected shot has weight 0
    """
    rates = rates or ChannelRates.from_scenario(scenario)
    n_slots = sequence.n_slots
    events: list[ErrorEvent] = []

    spin = apply_init_error(scenario.init_fidelity, rng)
    if spin[DOWN] != 0:
        events.append(ErrorEvent("init_flip", -1))
    state = JointState.vacuum(n_slots, spin)
    state.events = events

    realization = None
    if scenario.nuclear_noise_enabled and scenario.nuclear_amplitude > 0:
        spectrum = spectrum if spectrum is not None else default_spectrum(scenario.b_field)
        realization = sample_realization(spectrum, scenario.nuclear_amplitude, rng)

    # Laser spin flips only hit rotations between the first and last excitation.
    excitation_times = [e.start_time for e in sequence.excitations]
    window = (min(excitation_times), max(excitation_times)) if excitation_times else None

    clock: float | None = None
    for idx, event in enumerate(sequence):
        if isinstance(event, Rotation):
            if realization is not None and clock is not None and event.start_time > clock:
                state.apply_phase(accumulate_phase(realization, spectrum, clock, event.start_time))
            state.apply_spin_unitary(rotation_matrix(event.angle, event.phase))
            if window is None or window[0] < event.start_time < window[1]:
                apply_laser_spin_flip(state, rates.p_f, rng, event.angle, idx)
            clock = event.end_time
        elif isinstance(event, Excitation):
            if realization is not None and clock is not None and event.start_time > clock:
                state.apply_phase(accumulate_phase(realization, spectrum, clock, event.start_time))
                clock = event.start_time
            apply_offres_excitation(state, rates.p_wrong, rng, idx)
            state.emit(event.slot, event.time_bin, rates.emission).normalize()
            apply_raman_flip(state, scenario.cyclicity, rng, event.slot, event.time_bin, idx)
            if event.time_bin == "late":
                apply_pure_dephasing(
                    state, scenario.gamma, scenario.dephasing_rate, rng, idx
                )

    # Photon clicks, slot by slot.
    bits: list[int] = []
    for slot in range(n_slots):
        candidates = [
            (outcome, state.annihilate(slot, c_early, c_late))
            for outcome, c_early, c_late in _detection_operators(setting)
        ]
        probs = np.array([cand.norm2() for _, cand in candidates])
        total = float(probs.sum())
        if total <= _DETECTION_TOL:
            return ShotRecord(setting_index, (), 0.0, tuple(state.events))
        pick = int(np.searchsorted(np.cumsum(probs), rng.random() * total, side="right"))
        pick = min(pick, len(candidates) - 1)
        outcome, chosen = candidates[pick]
        chosen.weight = state.weight * total
        state = chosen.normalize()
        bits.append(outcome)

    # Spin readout: only ↓ is bright.
    _, p_down = state.spin_populations()
    bright = bool(rng.random() < p_down)
    reported = apply_readout_error(bright, scenario.readout_fidelity, rng)
    if reported != bright:
        state.events.append(ErrorEvent("readout_flip", len(sequence)))
    if not reported:
        return ShotRecord(setting_index, (), 0.0, tuple(state.events))
    return ShotRecord(
        setting_index,
        (_spin_bit(setting), *bits),
        float(state.weight),
        tuple(state.events),
    )


# =============================================================================
# Estimation
# =============================================================================


def _shot_value(setting: MeasurementSetting, bits: Sequence[int]) -> float:
    if setting.is_z:
        return 1.0 if len(set(bits)) == 1 else 0.0
    return -float(np.prod(bits))


def weighted_estimate(values: Sequence[float], weights: Sequence[float]) -> Estimate:
    """
    Weighted mean Σwv/Σw with standard error √(Σw²(v − m)²)/Σw.

    Raises:
        EstimationError: If the weights sum to zero
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    total = float(w.sum())
    if not total > 0:
        raise EstimationError("No accepted shots: total weight is zero")
    mean = float(np.sum(w * v) / total)
    err = float(math.sqrt(np.sum(w**2 * (v - mean) ** 2)) / total)
    return Estimate(mean, err)


@dataclass(frozen=True)
class _RunPlan:
    scenario: ScenarioConfig
    settings: tuple[MeasurementSetting, ...]
    sequences: tuple[PulseSequence, ...]
    rates: ChannelRates
    spectrum: NoiseSpectrum | None
    seed: int
    keep_events: bool


def _shot_rng(seed: int, setting_index: int, shot_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(setting_index, shot_index))
    )


def _run_chunk(plan: _RunPlan, setting_index: int, start: int, stop: int) -> list[ShotRecord]:
    setting = plan.settings[setting_index]
    sequence = plan.sequences[setting_index]
    records = []
    for shot in range(start, stop):
        record = run_trajectory(
            sequence,
            plan.scenario,
            setting,
            _shot_rng(plan.seed, setting_index, shot),
            rates=plan.rates,
            spectrum=plan.spectrum,
            setting_index=setting_index,
        )
        if not plan.keep_events:
            record = dataclasses.replace(record, events=())
        records.append(record)
    return records


def _run_chunk_star(args: tuple[_RunPlan, int, int, int]) -> list[ShotRecord]:
    return _run_chunk(*args)


def estimate_fidelity(
    scenario: ScenarioConfig,
    n: int,
    shots: int = DEFAULT_SHOTS,
    rng_seed: int = 0,
    *,
    threads: int = 1,
    timing: TimingConfig | None = None,
    spectrum: NoiseSpectrum | None = None,
    keep_records: bool = False,
    keep_events: bool = False,
) -> RunResult:
    """
    Estimate ⟨P̂z⟩, every ⟨M̂k⟩, ⟨χ̂⟩ and F for n qubits.

    Each observable is measured in both readout configurations with
    ``shots`` shots per configuration; the two are pooled.

    Args:
        scenario: Physical parameters
        n: Total number of qubits (spin plus n − 1 photons), at least 2
        shots: Shots per measurement setting, at least 1000
        rng_seed: Root seed
        threads: Worker processes; results are identical for any value
        timing: Pulse timing (TimingConfig() if omitted)
        spectrum: Nuclear PSD (default synthetic spectrum if omitted)
        keep_records: Keep every ShotRecord on the result (for CSV export)
        keep_events: Keep the error events on kept records

    Raises:
        InvalidArgumentError: If shots < 1000 or threads < 1
        EstimationError: If a setting accepts no shot
    """
    if shots < MIN_SHOTS:
        raise InvalidArgumentError(f"shots must be >= {MIN_SHOTS}, got {shots}")
    if threads < 1:
        raise InvalidArgumentError(f"threads must be >= 1, got {threads}")
    timing = timing or TimingConfig()
    settings = tuple(measurement_settings(n))
    sequences = tuple(build_experiment_cycle(n, timing, s) for s in settings)
    if scenario.nuclear_noise_enabled and spectrum is None:
        spectrum = default_spectrum(scenario.b_field)
    plan = _RunPlan(
        scenario=scenario,
        settings=settings,
        sequences=sequences,
        rates=ChannelRates.from_scenario(scenario),
        spectrum=spectrum,
        seed=int(rng_seed),
        keep_events=keep_events,
    )
    logger.info(
        "Running '%s' n=%d: %d settings x %d shots (seed %d, %d worker(s))",
        scenario.name, n, len(settings), shots, rng_seed, threads,
    )

    tasks = [
        (plan, s_idx, start, min(start + CHUNK_SIZE, shots))
        for s_idx in range(len(settings))
        for start in range(0, shots, CHUNK_SIZE)
    ]
    if threads == 1:
        chunks = [_run_chunk_star(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_run_chunk_star, tasks))

    per_setting: list[list[ShotRecord]] = [[] for _ in settings]
    for task, chunk in zip(tasks, chunks):
        per_setting[task[1]].extend(chunk)

    return _summarize(scenario, n, int(rng_seed), settings, per_setting, keep_records)


def _summarize(
    scenario: ScenarioConfig,
    n: int,
    seed: int,
    settings: Sequence[MeasurementSetting],
    per_setting: Sequence[Sequence[ShotRecord]],
    keep_records: bool,
) -> RunResult:
    summaries = []
    pooled: dict[str, tuple[list[float], list[float]]] = {}
    for setting, records in zip(settings, per_setting):
        accepted = [r for r in records if r.accepted]
        if not accepted:
            raise EstimationError(
                f"Setting {setting.label} accepted none of {len(records)} shots "
                f"(scenario '{scenario.name}', n={n})"
            )
        values = [_shot_value(setting, r.bits) for r in accepted]
        weights = [r.weight for r in accepted]
        summaries.append(
            SettingSummary(
                label=setting.label,
                observable=setting.observable,
                shots=len(records),
                accepted=len(accepted),
                weight_sum=float(sum(weights)),
                estimate=weighted_estimate(values, weights),
            )
        )
        bucket = pooled.setdefault(setting.observable, ([], []))
        bucket[0].extend(values)
        bucket[1].extend(weights)
        logger.debug(
            "%s: %d/%d accepted", setting.label, len(accepted), len(records)
        )

    pz = weighted_estimate(*pooled["Pz"])
    mk = tuple(weighted_estimate(*pooled[f"M{k}"]) for k in range(1, n + 1))
    decomposition = fidelity_from_expectations(pz.value, [m.value for m in mk])
    chi = Estimate(
        decomposition.chi, math.sqrt(sum(m.std_err**2 for m in mk)) / n
    )
    fidelity = Estimate(
        (pz.value + chi.value) / 2, 0.5 * math.hypot(pz.std_err, chi.std_err)
    )
    total = sum(len(r) for r in per_setting)
    accepted = sum(s.accepted for s in summaries)
    logger.info(
        "'%s' n=%d: F = %.4f ± %.4f (%d/%d shots accepted)",
        scenario.name, n, fidelity.value, fidelity.std_err, accepted, total,
    )
    records: tuple[ShotRecord, ...] = ()
    if keep_records:
        records = tuple(r for group in per_setting for r in group)
    return RunResult(
        scenario=scenario,
        n=n,
        seed=seed,
        pz=pz,
        mk=mk,
        chi=chi,
        fidelity=fidelity,
        shots_total=total,
        shots_accepted=accepted,
        settings=tuple(summaries),
        records=records,
    )


# =============================================================================
# Analytic Oracles
# =============================================================================


def _require(params: dict[str, float], *names: str) -> list[float]:
    missing = [name for name in names if name not in params]
    if missing:
        raise InvalidArgumentError(f"Missing oracle parameter(s): {', '.join(missing)}")
    return [float(params[name]) for name in names]


def _spin_flip_fidelity(n_photons: int, q_factor: float) -> float:
    """
    Fidelity with laser spin flips on the 2N − 1 rotations between emissions.

    Each π-rotation flips the spin relative to its ideal value with
    probability p_f. A slot holds x + y photons, x and y being the spin
    (0 for ↑, 1 for ↓) at its early and late pulse. Transfer matrices over
    the slots give the mean accepted weight E[W] and the weighted z-parity;
    coherence survives only in shots without a reset.
    """
    p = spin_flip_probability(q_factor)
    flip = np.array([[p, 1.0 - p], [1.0 - p, p]])
    spins = np.array([0.0, 1.0])
    early = np.repeat(spins[:, None], 2, axis=1)
    late = early.T
    start = np.array([0.5, 0.5])

    def chain(slot: np.ndarray, final: np.ndarray) -> float:
        vec = start @ (flip * slot)
        for _ in range(n_photons - 1):
            vec = vec @ flip @ (flip * slot)
        return float(vec @ final)

    mean_weight = chain(early + late, np.ones(2))
    parity = chain(early, np.array([1.0, 0.0])) + chain(late, np.array([0.0, 1.0]))
    coherent = math.exp(-(2 * n_photons - 1) / q_factor)
    return (parity + coherent) / (2.0 * mean_weight)


def analytic_oracle(channel: str, n_photons: int, **params: float) -> float:
    """
    Closed-form GHZ fidelity with a single error source.

    Channels and their parameters:
        cyclicity (cyclicity): 1 − (N − ½)/(2(C + 1)), first order in 1/C;
            the Monte Carlo drifts above it for C of order 10
        spin_flip (q_factor): exact transfer-matrix result for resets on the
            2N − 1 rotations between the first and last emission
        spin_flip_first_order (q_factor): ½(1 − (2N − 1)p_f + e^{−(2N − 1)/Q})
        init (init_fidelity): F_int
        readout (readout_fidelity): (3F_r − 1)/2
        dephasing (dephasing_rate, gamma): ½ + ½(Γ/(Γ + 2γd))ᴺ
        offres (delta_tilde): closed-form off-resonant fidelity

    Example:
        >>> round(analytic_oracle("cyclicity", 2, cyclicity=36), 4)
        0.9797
    """
    if n_photons < 1:
        raise InvalidArgumentError(f"n_photons must be >= 1, got {n_photons}")
    if channel == "cyclicity":
        (c,) = _require(params, "cyclicity")
        if not c > 0:
            raise InvalidArgumentError(f"cyclicity must be > 0, got {c}")
        if math.isinf(c):
            return 1.0
        return 1.0 - (n_photons - 0.5) / (2 * (c + 1))
    if channel == "spin_flip":
        (q,) = _require(params, "q_factor")
        return _spin_flip_fidelity(n_photons, q)
    if channel == "spin_flip_first_order":
        (q,) = _require(params, "q_factor")
        p_f = spin_flip_probability(q)
        middle = 2 * n_photons - 1
        return 0.5 * (1.0 - middle * p_f + math.exp(-middle / q))
    if channel == "init":
        (f_int,) = _require(params, "init_fidelity")
        return f_int
    if channel == "readout":
        (f_r,) = _require(params, "readout_fidelity")
        return (3 * f_r - 1) / 2
    if channel == "dephasing":
        gamma_d, gamma = _require(params, "dephasing_rate", "gamma")
        if gamma < 0 or gamma_d < 0 or gamma + gamma_d == 0:
            raise InvalidArgumentError(f"invalid rates gamma={gamma}, gamma_d={gamma_d}")
        return 0.5 + 0.5 * (gamma / (gamma + 2 * gamma_d)) ** n_photons
    if channel == "offres":
        (delta_tilde,) = _require(params, "delta_tilde")
        return closed_form_offres_fidelity(n_photons, delta_tilde)
    raise InvalidArgumentError(
        f"Unknown oracle channel '{channel}'. Expected one of: {', '.join(ORACLE_CHANNELS)}"
    )


def scenario_oracle(scenario: ScenarioConfig, channel: str, n_photons: int) -> float:
    """
    Evaluate analytic_oracle with the parameters taken from ``scenario``.

    ``channel`` is an oracle channel or an error-source name such as
    ``initialization`` or ``off_resonant``.
    """
    channel = _SOURCE_CHANNEL.get(channel, channel)
    params = {
        "cyclicity": scenario.cyclicity,
        "q_factor": scenario.q_factor,
        "init_fidelity": scenario.init_fidelity,
        "readout_fidelity": scenario.readout_fidelity,
        "dephasing_rate": scenario.dephasing_rate,
        "gamma": scenario.gamma,
        "delta_tilde": scenario.delta_tilde,
    }
    return analytic_oracle(channel, n_photons, **params)


# =============================================================================
# Error Budget
# =============================================================================


def error_budget(
    scenario: ScenarioConfig,
    n: int,
    shots: int = DEFAULT_SHOTS,
    rng_seed: int = 0,
    *,
    threads: int = 1,
    timing: TimingConfig | None = None,
    sources: Iterable[str] = BUDGET_SOURCES,
) -> list[BudgetRow]:
    """
    Leave-one-out infidelities F(without source) − F(all sources).

    All runs share ``rng_seed``, so the differences use common random numbers.
    """
    baseline = estimate_fidelity(
        scenario, n, shots, rng_seed, threads=threads, timing=timing
    ).fidelity
    rows = []
    for source in sources:
        without = estimate_fidelity(
            scenario.without(source), n, shots, rng_seed, threads=threads, timing=timing
        ).fidelity
        rows.append(
            BudgetRow(
                source=source,
                infidelity=without.value - baseline.value,
                std_err=math.hypot(without.std_err, baseline.std_err),
                fidelity_without=without.value,
            )
        )
        logger.info("Budget %s: %.4f", source, rows[-1].infidelity)
    return rows


# =============================================================================
# Extrapolation
# =============================================================================


def extrapolate(points: Iterable[tuple[float, float, float]]) -> ExtrapolationFit:
    """
    Fit F(N) = ½ + a·bᴺ to (N, F, σ) points by weighted least squares.

    σ = 0 everywhere means unweighted residuals. n_max is the largest qubit
    number N + 1 whose prediction stays one sigma above ½.

    Raises:
        InvalidArgumentError: With fewer than three points
        FitError: If the data lie at or below ½ or the fit fails
    """
    pts = [(int(p[0]), float(p[1]), float(p[2])) for p in points]
    if len(pts) < 3:
        raise InvalidArgumentError(f"extrapolate needs >= 3 points, got {len(pts)}")
    n_arr = np.array([p[0] for p in pts], dtype=float)
    f_arr = np.array([p[1] for p in pts])
    s_arr = np.array([p[2] for p in pts])
    weighted = bool(np.all(s_arr > 0))
    sigma = s_arr if weighted else np.ones_like(f_arr)

    excess = f_arr - 0.5
    if np.any(excess <= 0):
        raise FitError(
            "Fidelities must exceed 0.5 to fit an exponential decay",
            {"fidelities": f_arr.tolist()},
        )
    slope, intercept = np.polyfit(n_arr, np.log(excess), 1)
    x0 = np.array([math.exp(intercept), math.exp(slope)])

    def residuals(x: np.ndarray) -> np.ndarray:
        return (0.5 + x[0] * x[1] ** n_arr - f_arr) / sigma

    fit = least_squares(residuals, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if not fit.success:
        raise FitError(
            f"Extrapolation fit failed: {fit.message}",
            {"status": fit.status, "cost": float(fit.cost)},
        )
    a, b = (float(v) for v in fit.x)
    jac = fit.jac
    try:
        cov = np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jac.T @ jac)
    if not weighted:
        dof = len(pts) - 2
        scale = float(np.sum(fit.fun**2)) / dof if dof > 0 else 0.0
        cov = cov * scale

    decaying = 0 < b < 1
    result = ExtrapolationFit(a=a, b=b, covariance=cov, n_max=None, decaying=decaying,
                              points=tuple(pts))
    if not decaying:
        logger.warning("Extrapolation does not decay (b = %.4f); n_max unbounded", b)
        return result

    n_max = None
    for n_photons in range(1, _MAX_EXTRAPOLATION + 1):
        value, err = result.predict(n_photons)
        if value - err <= 0.5:
            # N − 1 photons passed; with the spin that is N qubits.
            n_max = n_photons if n_photons > 1 else None
            break
    else:
        logger.warning("Prediction stays above 0.5 up to N=%d", _MAX_EXTRAPOLATION)
    logger.debug("Extrapolation a=%.4f b=%.4f n_max=%s", a, b, n_max)
    return dataclasses.replace(result, n_max=n_max)


# =============================================================================
# Sweeps and Outlook
# =============================================================================


def _sweepable_fields() -> list[str]:
    return [
        f.name
        for f in dataclasses.fields(ScenarioConfig)
        if str(f.type) == "float"
    ]


def sweep(
    scenario: ScenarioConfig,
    parameter: str,
    values: Iterable[float],
    n: int,
    shots: int = DEFAULT_SHOTS,
    rng_seed: int = 0,
    *,
    threads: int = 1,
    timing: TimingConfig | None = None,
) -> list[SweepRow]:
    """
    Estimate F while one scalar scenario field takes each of ``values``.

    The oracle column is filled for parameters that map to a single-channel
    closed form (SWEEP_ORACLES).

    Raises:
        ConfigError: If ``parameter`` is not a scalar scenario field
    """
    if parameter not in _sweepable_fields():
        raise ConfigError(
            f"Cannot sweep '{parameter}'. Scalar fields: {', '.join(_sweepable_fields())}"
        )
    rows = []
    for value in values:
        point = scenario.with_overrides(**{parameter: float(value)})
        result = estimate_fidelity(point, n, shots, rng_seed, threads=threads, timing=timing)
        oracle = None
        channel = SWEEP_ORACLES.get(parameter)
        if channel is not None:
            try:
                oracle = scenario_oracle(point, channel, n - 1)
            except ValueError as exc:
                logger.debug("No oracle at %s=%s: %s", parameter, value, exc)
        rows.append(
            SweepRow(float(value), result.fidelity.value, result.fidelity.std_err, oracle)
        )
    return rows


def outlook(
    scenario: ScenarioConfig,
    n_values: Sequence[int] = (2, 3, 4),
    shots: int = DEFAULT_SHOTS,
    rng_seed: int = 0,
    *,
    threads: int = 1,
    timing: TimingConfig | None = None,
) -> OutlookResult:
    """
    Estimate F for each qubit number and extrapolate over photon number.

    Qubit numbers above ``timing.max_qubits`` do not fit the cycle; they are
    dropped with a warning and the fit uses the rest.
    """
    limit = (timing or TimingConfig()).max_qubits
    skipped = [n for n in n_values if n > limit]
    if skipped:
        logger.warning(
            "Skipping n=%s: the cycle holds at most n=%d qubits",
            ",".join(map(str, skipped)), limit,
        )
    results = {
        n: estimate_fidelity(scenario, n, shots, rng_seed, threads=threads, timing=timing)
        for n in n_values
        if n <= limit
    }
    points = [(n - 1, r.fidelity.value, r.fidelity.std_err) for n, r in results.items()]
    return OutlookResult(results=results, fit=extrapolate(points))
