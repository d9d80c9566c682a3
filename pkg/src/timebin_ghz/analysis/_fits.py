"""
Spectroscopy fits and closed-form figures of merit.

Nonlinear fits start from a coarse grid over the nonlinear parameters, with
the linear ones (offset, quadratures) solved exactly at every grid point,
and are refined with ``scipy.optimize.least_squares`` using analytic
Jacobians. Standard errors come from the Jacobian at the optimum scaled by
the residual variance.

Units: time in ns, angular frequencies in rad/ns, detunings reported in MHz.

Example:
    >>> from timebin_ghz.analysis import pi_fidelity, t2_rotation_infidelity
    >>> round(pi_fidelity(34), 3)
    0.986
    >>> round(t2_rotation_infidelity(2 * np.pi * 0.1236, 33.0), 4)
    0.003
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import least_squares

from timebin_ghz._errors import FitError, InvalidArgumentError, NumericError

__all__ = [
    "FitResult",
    "HomFit",
    "CyclicityFit",
    "ramsey_model",
    "rabi_model",
    "fit_ramsey",
    "fit_rabi",
    "pi_fidelity",
    "t2_rotation_infidelity",
    "hom_regression",
    "optical_pumping_rate",
    "fit_cyclicity",
    "UNDAMPED_Q",
]

logger = logging.getLogger(__name__)

# Q above this is reported as undamped.
UNDAMPED_Q = 1e6

_QUAD_EPSREL = 1e-10
_SIGMA_SPAN = 6.0


# =============================================================================
# Data Classes
# =============================================================================


@dataclass(frozen=True)
class FitResult:
    """Named estimates with standard errors, covariance and fit diagnostics."""

    params: dict[str, float]
    std_errs: dict[str, float]
    covariance: np.ndarray = field(repr=False)
    residual_norm: float
    converged: bool
    flags: tuple[str, ...] = ()

    def __getitem__(self, name: str) -> float:
        return self.params[name]


@dataclass(frozen=True)
class HomFit:
    """V_HOM = V_s − F·g²(0)."""

    v_s: float
    f_slope: float
    v_s_err: float
    f_slope_err: float
    residual_norm: float


@dataclass(frozen=True)
class CyclicityFit:
    gamma_y: float
    gamma_y_err: float
    cyclicity: float
    cyclicity_err: float
    residual_norm: float


def _as_xy(data: Iterable[Sequence[float]], minimum: int, what: str) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray([tuple(p) for p in data], dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidArgumentError(f"{what} expects (x, y) pairs, got shape {arr.shape}")
    if arr.shape[0] < minimum:
        raise InvalidArgumentError(f"{what} needs >= {minimum} points, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{what} data contain non-finite values")
    order = np.argsort(arr[:, 0], kind="stable")
    return arr[order, 0], arr[order, 1]


def _covariance(jac: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    dof = max(jac.shape[0] - jac.shape[1], 1)
    s2 = float(residuals @ residuals) / dof
    return np.linalg.pinv(jac.T @ jac) * s2


# =============================================================================
# Ramsey
# =============================================================================


def ramsey_model(
    t: np.ndarray | float,
    offset: float,
    amplitude: float,
    detuning_mhz: float,
    phase: float,
    t2_star: float,
) -> np.ndarray:
    """offset + amplitude·cos(2π·detuning·t + φ)·exp(−(t/T₂*)²)."""
    t = np.asarray(t, dtype=float)
    f = detuning_mhz * 1e-3
    return offset + amplitude * np.cos(2 * np.pi * f * t + phase) * np.exp(-((t / t2_star) ** 2))


def _ramsey_jac(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    offset, amp, f, phase, t2 = x
    arg = 2 * np.pi * f * t + phase
    env = np.exp(-((t / t2) ** 2))
    c, s = np.cos(arg), np.sin(arg)
    return np.column_stack(
        [
            np.ones_like(t),
            c * env,
            -amp * s * env * 2 * np.pi * t,
            -amp * s * env,
            amp * c * env * 2 * t**2 / t2**3,
        ]
    )


def fit_ramsey(data: Iterable[Sequence[float]]) -> FitResult:
    """
    Fit a Gaussian-damped Ramsey fringe.

    Args:
        data: (delay ns, population) pairs, at least 8

    Returns:
        FitResult with t2_star (ns), detuning (MHz), amplitude, offset, phase

    Raises:
        FitError: If the refinement does not converge
    """
    t, y = _as_xy(data, 8, "fit_ramsey")
    span = float(t[-1] - t[0])
    if not span > 0:
        raise InvalidArgumentError("fit_ramsey needs at least two distinct delays")
    dt = float(np.min(np.diff(np.unique(t)))) if np.unique(t).size > 1 else span
    nyquist = 0.5 / dt
    freqs = np.arange(0.0, nyquist, 1.0 / (4 * span))
    t2_grid = span * np.array([0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.5, 5.0])

    best: tuple[float, np.ndarray] | None = None
    for t2 in t2_grid:
        env = np.exp(-((t / t2) ** 2))
        for f in freqs:
            design = np.column_stack(
                [np.ones_like(t), np.cos(2 * np.pi * f * t) * env, np.sin(2 * np.pi * f * t) * env]
            )
            coef, *_ = np.linalg.lstsq(design, y, rcond=None)
            ssr = float(np.sum((design @ coef - y) ** 2))
            if best is None or ssr < best[0]:
                offset, a_cos, a_sin = coef
                x0 = np.array([offset, math.hypot(a_cos, a_sin), f, math.atan2(-a_sin, a_cos), t2])
                best = (ssr, x0)
    assert best is not None
    x0 = best[1]
    logger.debug("Ramsey grid start: f=%.4f GHz, T2*=%.2f ns", x0[2], x0[4])

    def residuals(x: np.ndarray) -> np.ndarray:
        return ramsey_model(t, x[0], x[1], x[2] * 1e3, x[3], x[4]) - y

    lower = [-np.inf, 0.0, 0.0, -np.inf, 1e-9]
    upper = [np.inf, np.inf, np.inf, np.inf, np.inf]
    fit = least_squares(
        residuals, x0, jac=lambda x: _ramsey_jac(x, t), bounds=(lower, upper),
        xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=10_000,
    )
    if not fit.success:
        raise FitError(
            f"Ramsey fit did not converge: {fit.message}",
            {"residuals": fit.fun.tolist(), "status": fit.status},
        )
    offset, amp, f, phase, t2 = (float(v) for v in fit.x)
    cov = _covariance(fit.jac, fit.fun)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    flags = ()
    if f * span < 1.0 and f > 0:
        flags = ("less_than_one_oscillation",)
    return FitResult(
        params={
            "offset": offset,
            "amplitude": amp,
            "detuning": f * 1e3,
            "phase": math.remainder(phase, 2 * math.pi),
            "t2_star": t2,
        },
        std_errs={
            "offset": float(err[0]),
            "amplitude": float(err[1]),
            "detuning": float(err[2]) * 1e3,
            "phase": float(err[3]),
            "t2_star": float(err[4]),
        },
        covariance=cov,
        residual_norm=float(np.linalg.norm(fit.fun)),
        converged=bool(fit.success),
        flags=flags,
    )


# =============================================================================
# Rabi
# =============================================================================


def rabi_model(
    t: np.ndarray | float, offset: float, amplitude: float, omega_r: float, q_factor: float
) -> np.ndarray:
    """offset − amplitude·cos(Ω_r t)·exp(−t/(Q·T_π)), T_π = π/Ω_r."""
    t = np.asarray(t, dtype=float)
    kappa = 0.0 if math.isinf(q_factor) else omega_r / (math.pi * q_factor)
    return offset - amplitude * np.cos(omega_r * t) * np.exp(-kappa * t)


def _rabi_jac(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    offset, amp, omega, kappa = x
    env = np.exp(-kappa * t)
    c, s = np.cos(omega * t), np.sin(omega * t)
    return np.column_stack(
        [np.ones_like(t), -c * env, amp * s * env * t, amp * c * env * t]
    )


def fit_rabi(data: Iterable[Sequence[float]]) -> FitResult:
    """
    Fit damped Rabi oscillations for Ω_r and the Q-factor.

    The decay rate κ = Ω_r/(πQ) is fitted with κ ≥ 0; κ → 0 gives Q → ∞,
    which is flagged as ``undamped``.

    Args:
        data: (pulse duration ns, population) pairs, at least 10

    Returns:
        FitResult with omega_r (rad/ns), q_factor, amplitude, offset
    """
    t, y = _as_xy(data, 10, "fit_rabi")
    span = float(t[-1] - t[0])
    if not span > 0:
        raise InvalidArgumentError("fit_rabi needs at least two distinct durations")
    dt = float(np.min(np.diff(np.unique(t))))
    omegas = 2 * np.pi * np.arange(1.0 / (4 * span), 0.5 / dt, 1.0 / (8 * span))
    kappas = np.array([0.0, 0.1, 0.3, 1.0, 3.0]) / span

    best: tuple[float, np.ndarray] | None = None
    for kappa in kappas:
        env = np.exp(-kappa * t)
        for omega in omegas:
            design = np.column_stack([np.ones_like(t), -np.cos(omega * t) * env])
            coef, *_ = np.linalg.lstsq(design, y, rcond=None)
            ssr = float(np.sum((design @ coef - y) ** 2))
            if best is None or ssr < best[0]:
                best = (ssr, np.array([coef[0], coef[1], omega, kappa]))
    assert best is not None
    x0 = best[1]

    def residuals(x: np.ndarray) -> np.ndarray:
        env = np.exp(-x[3] * t)
        return x[0] - x[1] * np.cos(x[2] * t) * env - y

    fit = least_squares(
        residuals, x0, jac=lambda x: _rabi_jac(x, t),
        bounds=([-np.inf, -np.inf, 0.0, 0.0], [np.inf, np.inf, np.inf, np.inf]),
        xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=10_000,
    )
    if not fit.success:
        raise FitError(
            f"Rabi fit did not converge: {fit.message}",
            {"residuals": fit.fun.tolist(), "status": fit.status},
        )
    offset, amp, omega, kappa = (float(v) for v in fit.x)
    cov = _covariance(fit.jac, fit.fun)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    flags: list[str] = []
    q = omega / (math.pi * kappa) if kappa > 0 else math.inf
    if q > UNDAMPED_Q:
        q = math.inf
        flags.append("undamped")
        logger.warning("Rabi fit shows no damping; Q reported as inf")
    if omega * span / (2 * math.pi) < 3:
        flags.append("fewer_than_three_periods")
    if math.isinf(q):
        q_err = math.inf
    else:
        # Q = Ω/(πκ): first-order propagation of the (Ω, κ) covariance.
        grad = np.array([1 / (math.pi * kappa), -omega / (math.pi * kappa**2)])
        q_err = math.sqrt(max(float(grad @ cov[2:, 2:] @ grad), 0.0))
    return FitResult(
        params={"offset": offset, "amplitude": amp, "omega_r": omega, "q_factor": q},
        std_errs={
            "offset": float(err[0]),
            "amplitude": float(err[1]),
            "omega_r": float(err[2]),
            "q_factor": q_err,
        },
        covariance=cov,
        residual_norm=float(np.linalg.norm(fit.fun)),
        converged=bool(fit.success),
        flags=tuple(flags),
    )


# =============================================================================
# Closed Forms
# =============================================================================


def pi_fidelity(q_factor: float) -> float:
    """F_π = ½(1 + e^{−1/Q})."""
    if not q_factor > 0:
        raise InvalidArgumentError(f"q_factor must be > 0, got {q_factor}")
    return 0.5 * (1.0 + math.exp(-1.0 / q_factor))


def t2_rotation_infidelity(omega_r: float, t2_star: float) -> float:
    """Rotation infidelity 2/(Ω_r T₂*)² from quasi-static Overhauser noise."""
    product = omega_r * t2_star
    if not product > 0:
        raise InvalidArgumentError(
            f"omega_r * t2_star must be > 0, got {omega_r} * {t2_star}"
        )
    return 2.0 / product**2


# =============================================================================
# HOM Regression
# =============================================================================


def hom_regression(points: Iterable[Sequence[float]]) -> HomFit:
    """
    Ordinary least squares of V_HOM against g²(0).

    Accepts two or more points. Two points give the exact line through them
    with zero uncertainties; the errors need at least three.

    Raises:
        InvalidArgumentError: With fewer than two points
        FitError: If every g²(0) is equal
    """
    g2, v = _as_xy(points, 2, "hom_regression")
    if np.ptp(g2) == 0:
        raise FitError("All g2(0) values are equal; slope is undetermined", {"g2": g2.tolist()})
    design = np.column_stack([np.ones_like(g2), g2])
    coef, *_ = np.linalg.lstsq(design, v, rcond=None)
    resid = design @ coef - v
    dof = g2.size - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = np.linalg.inv(design.T @ design) * s2
    return HomFit(
        v_s=float(coef[0]),
        f_slope=float(-coef[1]),
        v_s_err=math.sqrt(cov[0, 0]),
        f_slope_err=math.sqrt(cov[1, 1]),
        residual_norm=float(np.linalg.norm(resid)),
    )


# =============================================================================
# Optical Pumping and Cyclicity
# =============================================================================


def optical_pumping_rate(
    p_ratio: float, gamma_y: float, sigma_e: float, gamma: float
) -> float:
    """
    Spin pumping rate of the diagonal transition under spectral diffusion.

    γ_osp = γ_Y ∫ G(δ; σe) · s/(2s + 1 + 4δ²/Γ²) dδ over ±6σe, s = P/Psat.
    σe and Γ are angular (rad/ns); σe = 0 is the on-resonance limit.

    Raises:
        NumericError: If the quadrature does not reach its tolerance
    """
    if p_ratio < 0:
        raise InvalidArgumentError(f"p_ratio must be >= 0, got {p_ratio}")
    if not gamma_y > 0 or not gamma > 0:
        raise InvalidArgumentError(f"gamma_y and gamma must be > 0, got {gamma_y}, {gamma}")
    if sigma_e < 0:
        raise InvalidArgumentError(f"sigma_e must be >= 0, got {sigma_e}")
    if p_ratio == 0:
        return 0.0
    if sigma_e == 0:
        return gamma_y * p_ratio / (2 * p_ratio + 1)

    norm = 1.0 / (sigma_e * math.sqrt(2 * math.pi))

    def integrand(delta: float) -> float:
        weight = norm * math.exp(-0.5 * (delta / sigma_e) ** 2)
        return weight * p_ratio / (2 * p_ratio + 1 + 4 * delta**2 / gamma**2)

    bound = _SIGMA_SPAN * sigma_e
    value, abserr, info = quad(
        integrand, -bound, bound, epsabs=0.0, epsrel=_QUAD_EPSREL, limit=200, full_output=1
    )[:3]
    if abserr > 1e-8 * max(abs(value), 1e-300):
        raise NumericError(
            "Pumping-rate quadrature did not converge",
            {"value": value, "abserr": abserr, "neval": info.get("neval")},
        )
    return gamma_y * value


def fit_cyclicity(
    data: Iterable[Sequence[float]], gamma: float, sigma_e: float
) -> CyclicityFit:
    """
    One-parameter least squares for γ_Y, then C = (Γ − γ_Y)/γ_Y.

    γ_osp is linear in γ_Y, so the optimum is Σ yI/Σ I² with I the pumping
    integral at unit γ_Y.

    Args:
        data: (P/Psat, γ_osp in 1/ns) pairs, at least 4
        gamma: Γ in 1/ns
        sigma_e: Spectral-diffusion standard deviation in rad/ns

    Raises:
        FitError: If the fitted γ_Y is not positive
    """
    s, y = _as_xy(data, 4, "fit_cyclicity")
    basis = np.array([optical_pumping_rate(si, 1.0, sigma_e, gamma) for si in s])
    denom = float(basis @ basis)
    if not denom > 0:
        raise FitError("Pumping powers are all zero; gamma_Y is undetermined", {})
    gamma_y = float(basis @ y) / denom
    if not gamma_y > 0:
        raise FitError(f"Fitted gamma_Y = {gamma_y} is not positive", {"gamma_y": gamma_y})
    resid = gamma_y * basis - y
    dof = max(s.size - 1, 1)
    gamma_y_err = math.sqrt(float(resid @ resid) / dof / denom)
    cyclicity = (gamma - gamma_y) / gamma_y
    return CyclicityFit(
        gamma_y=gamma_y,
        gamma_y_err=gamma_y_err,
        cyclicity=cyclicity,
        cyclicity_err=gamma / gamma_y**2 * gamma_y_err,
        residual_norm=float(np.linalg.norm(resid)),
    )
