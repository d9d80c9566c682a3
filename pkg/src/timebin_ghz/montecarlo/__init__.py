"""
Monte Carlo submodule.

Trajectory sampling over the joint spin ⊗ time-bin state, post-selected
fidelity estimators, analytic single-channel oracles, the leave-one-out
error budget and the fidelity-versus-photon-number extrapolation.
"""

from timebin_ghz.montecarlo._engine import (
    BUDGET_SOURCES,
    DEFAULT_SHOTS,
    MIN_SHOTS,
    ORACLE_CHANNELS,
    SWEEP_ORACLES,
    BudgetRow,
    ChannelRates,
    Estimate,
    ExtrapolationFit,
    OutlookResult,
    RunResult,
    SettingSummary,
    ShotRecord,
    SweepRow,
    analytic_oracle,
    error_budget,
    estimate_fidelity,
    extrapolate,
    outlook,
    run_trajectory,
    scenario_oracle,
    sweep,
    weighted_estimate,
)
from timebin_ghz.montecarlo._state import DOWN, UP, JointState, SlotKey

__all__ = [
    "JointState",
    "SlotKey",
    "UP",
    "DOWN",
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
