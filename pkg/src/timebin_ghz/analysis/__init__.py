"""
Analysis submodule.

Fits of Ramsey, Rabi, HOM and optical-pumping data, the π-rotation and T₂*
figures of merit, the photon-loss budget and the generation-rate estimate.
"""

from timebin_ghz.analysis._budget import (
    LOSS_BUDGET_PATH,
    LossBudget,
    Stage,
    default_loss_budget,
    efficiency_budget,
    ghz_rate,
    loss_budget_from_csv,
    photon_efficiency,
    to_db,
)
from timebin_ghz.analysis._fits import (
    UNDAMPED_Q,
    CyclicityFit,
    FitResult,
    HomFit,
    fit_cyclicity,
    fit_rabi,
    fit_ramsey,
    hom_regression,
    optical_pumping_rate,
    pi_fidelity,
    rabi_model,
    ramsey_model,
    t2_rotation_infidelity,
)

__all__ = [
    "FitResult",
    "HomFit",
    "CyclicityFit",
    "UNDAMPED_Q",
    "ramsey_model",
    "rabi_model",
    "fit_ramsey",
    "fit_rabi",
    "pi_fidelity",
    "t2_rotation_infidelity",
    "hom_regression",
    "optical_pumping_rate",
    "fit_cyclicity",
    "Stage",
    "LossBudget",
    "LOSS_BUDGET_PATH",
    "to_db",
    "efficiency_budget",
    "loss_budget_from_csv",
    "default_loss_budget",
    "photon_efficiency",
    "ghz_rate",
]
