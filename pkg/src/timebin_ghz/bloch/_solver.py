"""
Photon-number-resolved optical Bloch equations for a pulsed two-level emitter.

The density matrix is split into sectors by the number of photons emitted so
far (0, 1, 2). Decay from the excited state of sector k feeds the ground
state of sector k + 1; the ground state of sector 2 is a sink. Nine real
variables are integrated with ``scipy.integrate.solve_ivp``:

    ρgg0, ρee0, Re ρeg0, Im ρeg0, ρgg1, ρee1, Re ρeg1, Im ρeg1, ρgg2

Units: time in ns, rates in ns⁻¹, detunings in rad/ns (2π·GHz).

Example:
    >>> from timebin_ghz.bloch import TwoLevelParams, solve_bloch
    >>> out = solve_bloch(TwoLevelParams(gamma=0.0, delta_l=0.0, pulse_shape="square",
    ...                                  pulse_area=np.pi, duration=0.03))
    >>> round(out.p_one, 6)
    1.0
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import erf

from timebin_ghz._errors import DomainError, InvalidArgumentError, NumericError

if TYPE_CHECKING:
    from timebin_ghz.channels import ScenarioConfig

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

logger = logging.getLogger(__name__)

GAUSSIAN_TRUNCATION = 4.0
DECAY_WINDOW_LIFETIMES = 10.0

_CONVERGENCE_TOL = 1e-6
_CONSERVATION_TOL = 1e-8
_RTOL = 1e-10
_ATOL = 1e-12
_STEPS_PER_PULSE = 200


def ghz_to_angular(detuning_ghz: float) -> float:
    """Convert a detuning in GHz to rad/ns."""
    return 2 * math.pi * detuning_ghz


# =============================================================================
# Data Classes
# =============================================================================


@dataclass(frozen=True)
class TwoLevelParams:
    """
    Driven two-level transition.

    ``duration`` is the intensity FWHM for a Gaussian pulse and the full
    width for a square pulse. ``pulse_area`` is ∫Ω(t)dt.
    """

    gamma: float
    delta_l: float
    pulse_shape: str = "gaussian"
    pulse_area: float = math.pi
    duration: float = 0.030

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise InvalidArgumentError(f"gamma must be >= 0, got {self.gamma}")
        if not self.duration > 0:
            raise InvalidArgumentError(f"duration must be > 0, got {self.duration}")
        if self.pulse_area < 0:
            raise InvalidArgumentError(f"pulse_area must be >= 0, got {self.pulse_area}")
        if self.pulse_shape not in ("gaussian", "square"):
            raise InvalidArgumentError(
                f"pulse_shape must be 'gaussian' or 'square', got '{self.pulse_shape}'"
            )

    @property
    def field_sigma(self) -> float:
        """Standard deviation of the field envelope Ω(t) for a Gaussian pulse."""
        return self.duration / (2 * math.sqrt(math.log(2)))

    def pulse_window(self) -> tuple[float, float]:
        if self.pulse_shape == "square":
            return 0.0, self.duration
        half = GAUSSIAN_TRUNCATION * self.field_sigma
        return -half, half

    def rabi(self) -> Callable[[float], float]:
        """Return Ω(t) normalised so the truncated pulse has area ``pulse_area``."""
        if self.pulse_shape == "square":
            omega0 = self.pulse_area / self.duration
            end = self.duration
            return lambda t: omega0 if 0.0 <= t <= end else 0.0
        sigma = self.field_sigma
        cut = GAUSSIAN_TRUNCATION * sigma
        area_unit = sigma * math.sqrt(2 * math.pi) * erf(GAUSSIAN_TRUNCATION / math.sqrt(2))
        omega0 = self.pulse_area / area_unit
        return lambda t: omega0 * math.exp(-0.5 * (t / sigma) ** 2) if abs(t) <= cut else 0.0


@dataclass(frozen=True)
class ExcitationOutcome:
    """Emission statistics of one excitation pulse."""

    p_zero: float
    p_one: float
    p_two: float
    residual_excited: float

    @property
    def total(self) -> float:
        return self.p_zero + self.p_one + self.p_two

    @property
    def emission_probability(self) -> float:
        return 1.0 - self.p_zero

    def as_array(self) -> np.ndarray:
        return np.array([self.p_zero, self.p_one, self.p_two])


@dataclass(frozen=True)
class OffResonantOutcome:
    p_wrong: float
    p_reexcite: float
    target: ExcitationOutcome
    wrong: ExcitationOutcome


# =============================================================================
# Bloch Equations
# =============================================================================


def _rhs_factory(params: TwoLevelParams):
    gamma = params.gamma
    delta = params.delta_l
    rabi = params.rabi()

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        omega = rabi(t)
        gg0, ee0, re0, im0, gg1, ee1, re1, im1, _gg2 = y
        d = np.empty(9)
        # sector 0
        d[0] = omega * im0
        d[1] = -omega * im0 - gamma * ee0
        d[2] = -delta * im0 - 0.5 * gamma * re0
        d[3] = delta * re0 + 0.5 * omega * (ee0 - gg0) - 0.5 * gamma * im0
        # sector 1, fed by decay of sector 0
        d[4] = omega * im1 + gamma * ee0
        d[5] = -omega * im1 - gamma * ee1
        d[6] = -delta * im1 - 0.5 * gamma * re1
        d[7] = delta * re1 + 0.5 * omega * (ee1 - gg1) - 0.5 * gamma * im1
        # two-photon sink
        d[8] = gamma * ee1
        return d

    return rhs


def _integrate(params: TwoLevelParams, max_step: float) -> np.ndarray:
    rhs = _rhs_factory(params)
    t0, t1 = params.pulse_window()
    y0 = np.zeros(9)
    y0[0] = 1.0

    pulse = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=_RTOL, atol=_ATOL, max_step=max_step)
    if not pulse.success:
        raise NumericError(
            "Bloch integration failed during the pulse",
            {"message": pulse.message, "max_step": max_step, "params": params},
        )
    y = pulse.y[:, -1]
    if params.gamma > 0:
        window = DECAY_WINDOW_LIFETIMES / params.gamma
        decay = solve_ivp(rhs, (t1, t1 + window), y, method="DOP853", rtol=_RTOL, atol=_ATOL)
        if not decay.success:
            raise NumericError(
                "Bloch integration failed during the decay window",
                {"message": decay.message, "window": window, "params": params},
            )
        y = decay.y[:, -1]
    return y


def _outcome_from_state(y: np.ndarray) -> ExcitationOutcome:
    gg0, ee0, _, _, gg1, ee1, _, _, gg2 = y
    return ExcitationOutcome(
        p_zero=float(gg0),
        p_one=float(gg1 + ee0),
        p_two=float(gg2 + ee1),
        residual_excited=float(ee0 + ee1),
    )


@lru_cache(maxsize=256)
def _solve_cached(params: TwoLevelParams, tolerance: float) -> ExcitationOutcome:
    t0, t1 = params.pulse_window()
    max_step = (t1 - t0) / _STEPS_PER_PULSE
    coarse = _integrate(params, max_step)
    fine = _integrate(params, max_step / 2)

    total = float(fine[0] + fine[1] + fine[4] + fine[5] + fine[8])
    if abs(total - 1.0) > _CONSERVATION_TOL:
        raise NumericError(
            f"Bloch solution lost probability: total {total!r}",
            {"total": total, "params": params},
        )
    a = _outcome_from_state(coarse)
    b = _outcome_from_state(fine)
    diffs = np.abs(
        np.array([a.p_zero, a.p_one, a.p_two, a.residual_excited])
        - np.array([b.p_zero, b.p_one, b.p_two, b.residual_excited])
    )
    if diffs.max() > tolerance:
        raise NumericError(
            f"Bloch solution did not converge under step halving (max change {diffs.max():.2e})",
            {"differences": diffs.tolist(), "max_step": max_step, "params": params},
        )
    logger.debug(
        "solve_bloch %s area=%.3f delta=%.3f: p0=%.6f p1=%.6f p2=%.6f",
        params.pulse_shape,
        params.pulse_area,
        params.delta_l,
        b.p_zero,
        b.p_one,
        b.p_two,
    )
    return b


def solve_bloch(params: TwoLevelParams, tolerance: float = _CONVERGENCE_TOL) -> ExcitationOutcome:
    """
    Integrate the photon-resolved Bloch equations from the vacuum ground state.

    Integration covers the pulse and a trailing free decay of 10/Γ. Excited
    population left at the end is assigned to the next photon number.

    Args:
        params: Transition and pulse description
        tolerance: Largest change of any outcome allowed under step halving

    Returns:
        ExcitationOutcome with p_zero, p_one, p_two and residual_excited

    Raises:
        NumericError: If integration fails, loses probability or does not converge
    """
    return _solve_cached(params, float(tolerance))


# =============================================================================
# Scenario Helpers
# =============================================================================


def excitation_probability(params: TwoLevelParams) -> float:
    """
    Excited-state population the pulse alone leaves behind (Γ = 0).

    This is the inversion a pulse of the given area and width achieves, e.g.
    sin²(0.35π) ≈ 0.79 for a resonant 0.7π pulse. Emission under decay is
    lower because part of the population decays and is re-driven during
    the pulse.
    """
    return solve_bloch(dataclasses.replace(params, gamma=0.0)).emission_probability


def offres_excitation_probability(scenario: ScenarioConfig) -> OffResonantOutcome:
    """
    Excitation statistics of the target and the unwanted cycling transition.

    The laser sits ``laser_detuning_ghz`` from the target; the unwanted
    transition is a further ``cycling_splitting_ghz`` away, so its detuning
    is Δ − laser detuning (12 GHz for Δ = 10 GHz and a −2 GHz laser).
    """
    target = solve_bloch(scenario.target_params())
    wrong = solve_bloch(scenario.wrong_params())
    return OffResonantOutcome(
        p_wrong=wrong.emission_probability,
        p_reexcite=target.p_two,
        target=target,
        wrong=wrong,
    )


def optimal_square_duration(delta_l: float) -> float:
    """
    Square-pulse duration √3π/Δl at which a resonant π-pulse is a 2π
    rotation of a transition detuned by Δl.

    Args:
        delta_l: Detuning of the unwanted transition, rad/ns
    """
    if not delta_l > 0:
        raise InvalidArgumentError(f"delta_l must be > 0, got {delta_l}")
    return math.sqrt(3) * math.pi / delta_l


# =============================================================================
# Closed-Form Off-Resonant Fidelity
# =============================================================================


def _offres_coefficients(delta_tilde: float) -> dict[str, float]:
    d = delta_tilde
    root3pi = math.sqrt(3) * math.pi
    c1 = root3pi / (2 * d)
    c2 = 1.0 - c1
    return {
        "c0": 1.0,
        "c1": c1,
        "c2": c2,
        "phi0": 13 * root3pi / (128 * d) * c2,
        "phi1": 3 * root3pi / (8 * d) - 3 * math.pi**2 / (2 * d**2) * (3 / 8 - 1 / math.pi**2),
        "phi2": math.pi * math.sqrt(3) / (8 * d) * c2,
        "phi3": 3 / 16 * (root3pi / (8 * d) - 3 * math.pi**2 / (16 * d**2)),
    }


def closed_form_offres_fidelity(n_photons: int, delta_tilde: float) -> float:
    """
    GHZ fidelity limited by off-resonant excitation of the unwanted transition.

    F = ½(D₁^N + D₂^N)/(D₂ + D₃)^N for a square pulse of the optimal
    duration and ideal frequency filtering. All coefficients are squared
    magnitudes.

    Args:
        n_photons: Number of photonic qubits N
        delta_tilde: Unwanted-transition detuning in units of Γ/2, 2Δl/Γ
            with Δl in rad/ns (ScenarioConfig.delta_tilde)

    Raises:
        DomainError: If delta_tilde ≤ √3π/2 (negative |c₂|²)
    """
    if n_photons < 0:
        raise InvalidArgumentError(f"n_photons must be >= 0, got {n_photons}")
    threshold = math.sqrt(3) * math.pi / 2
    if not delta_tilde > threshold:
        raise DomainError(
            f"delta_tilde must exceed √3π/2 ≈ {threshold:.4f}, got {delta_tilde}",
            {"delta_tilde": delta_tilde, "threshold": threshold},
        )
    k = _offres_coefficients(delta_tilde)
    c0, c1, c2 = k["c0"], k["c1"], k["c2"]
    p0, p1, p2, p3 = k["phi0"], k["phi1"], k["phi2"], k["phi3"]

    d1 = c0 * c2
    d2 = c0 * c2 + c0 * p2 + p0 * c2 + p0 * p2
    # Every c₃ term of D₃ vanishes: |c₃|² = 0.
    d3 = c1 * p3 + p3 * p1 + p3 * c2 + p3 * p2
    return 0.5 * (d1**n_photons + d2**n_photons) / (d2 + d3) ** n_photons
