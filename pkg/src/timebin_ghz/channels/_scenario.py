"""
Scenario configuration: the physical parameter set of one simulation.

Presets ship in ``data/presets.toml`` (one section per scenario) and are
loaded once per process. User files use the same layout and may add new
sections or override bundled ones.

Example:
    >>> from timebin_ghz.channels import get_preset
    >>> cfg = get_preset("inas-current")
    >>> cfg.q_factor, cfg.pulse_area_pi
    (34.0, 0.7)
    >>> cfg.without("spin_flip").q_factor
    inf
"""

from __future__ import annotations

import dataclasses
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from timebin_ghz._errors import ConfigError
from timebin_ghz.bloch import TwoLevelParams, ghz_to_angular, optimal_square_duration

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ScenarioConfig",
    "ERROR_SOURCES",
    "PRESETS_PATH",
    "load_scenarios",
    "get_preset",
    "preset_names",
]

logger = logging.getLogger(__name__)

PRESETS_PATH = Path(__file__).parent.parent / "data" / "presets.toml"

# Error sources that ScenarioConfig.without() can switch off.
ERROR_SOURCES = (
    "off_resonant",
    "nuclear",
    "spin_flip",
    "readout",
    "dephasing",
    "cyclicity",
    "initialization",
)

PULSE_SHAPES = ("gaussian", "square", "square-optimal")

_SWITCH_OFF: dict[str, dict[str, Any]] = {
    "off_resonant": {"off_resonant_enabled": False},
    "nuclear": {"nuclear_noise_enabled": False},
    "spin_flip": {"q_factor": math.inf},
    "readout": {"readout_fidelity": 1.0},
    "dephasing": {"dephasing_rate": 0.0},
    "cyclicity": {"cyclicity": math.inf},
    "initialization": {"init_fidelity": 1.0},
}


# =============================================================================
# Scenario
# =============================================================================


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Physical parameters of a simulated device.

    Rates are in 1/ns, detunings in GHz. ``cyclicity`` and ``q_factor`` accept
    ``math.inf`` to disable the Raman and laser-induced spin flips.
    ``reexcitation_enabled = false`` folds two-photon emission into single
    emission while the unwanted transition stays active.
    """

    name: str = "custom"
    description: str = ""
    gamma: float = 1 / 0.235
    cyclicity: float = 36.0
    q_factor: float = 34.0
    readout_fidelity: float = 0.98
    init_fidelity: float = 0.99
    dephasing_rate: float = 0.069
    laser_detuning_ghz: float = -2.0
    cycling_splitting_ghz: float = 10.0
    pulse_shape: str = "gaussian"
    pulse_area_pi: float = 0.7
    pulse_fwhm_ps: float = 30.0
    nuclear_noise_enabled: bool = True
    nuclear_amplitude: float = 0.15
    b_field: float = 4.0
    off_resonant_enabled: bool = True
    reexcitation_enabled: bool = True

    def __post_init__(self) -> None:
        for key in ("gamma", "dephasing_rate", "nuclear_amplitude"):
            value = getattr(self, key)
            if not value >= 0:
                raise ConfigError(f"{self.name}: {key} must be >= 0, got {value}")
        for key in ("cyclicity", "q_factor", "pulse_fwhm_ps", "b_field"):
            value = getattr(self, key)
            if not value > 0:
                raise ConfigError(f"{self.name}: {key} must be > 0, got {value}")
        for key in ("readout_fidelity", "init_fidelity"):
            value = getattr(self, key)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{self.name}: {key} must lie in [0, 1], got {value}")
        if self.pulse_area_pi < 0:
            raise ConfigError(
                f"{self.name}: pulse_area_pi must be >= 0, got {self.pulse_area_pi}"
            )
        if self.pulse_shape not in PULSE_SHAPES:
            raise ConfigError(
                f"{self.name}: pulse_shape must be one of {', '.join(PULSE_SHAPES)}, "
                f"got '{self.pulse_shape}'"
            )
        if (
            self.pulse_shape == "square-optimal"
            and self.cycling_splitting_ghz == self.laser_detuning_ghz
        ):
            raise ConfigError(
                f"{self.name}: square-optimal pulses need the unwanted transition "
                "detuned from the laser"
            )

    # -------------------------------------------------------------------------
    # Construction
    # -------------------------------------------------------------------------

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], name: str | None = None) -> ScenarioConfig:
        """
        Build a scenario from a flat mapping (one TOML section).

        Raises:
            ConfigError: On unknown keys or values of the wrong type
        """
        values = dict(data)
        if name is not None:
            values["name"] = name
        unknown = sorted(set(values) - set(cls.field_names()))
        if unknown:
            raise ConfigError(
                f"Unknown scenario key(s) in '{values.get('name', 'custom')}': "
                f"{', '.join(unknown)}"
            )
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        for key, value in values.items():
            values[key] = _coerce(key, types[key], value)
        return cls(**values)

    def with_overrides(self, **overrides: Any) -> ScenarioConfig:
        """Return a copy with some fields replaced; unknown fields raise ConfigError."""
        unknown = sorted(set(overrides) - set(self.field_names()))
        if unknown:
            raise ConfigError(f"Unknown scenario field(s): {', '.join(unknown)}")
        types = {f.name: f.type for f in dataclasses.fields(self)}
        coerced = {key: _coerce(key, types[key], value) for key, value in overrides.items()}
        return dataclasses.replace(self, **coerced)

    def without(self, source: str) -> ScenarioConfig:
        """
        Switch one error source off.

        Args:
            source: One of ERROR_SOURCES
        """
        if source not in _SWITCH_OFF:
            raise ConfigError(
                f"Unknown error source '{source}'. Expected one of: {', '.join(ERROR_SOURCES)}"
            )
        return dataclasses.replace(
            self, name=f"{self.name}-without-{source}", **_SWITCH_OFF[source]
        )

    def only(self, source: str) -> ScenarioConfig:
        """Keep ``source`` as configured and switch every other source off."""
        if source not in _SWITCH_OFF:
            raise ConfigError(
                f"Unknown error source '{source}'. Expected one of: {', '.join(ERROR_SOURCES)}"
            )
        changes: dict[str, Any] = {}
        for other, fields in _SWITCH_OFF.items():
            if other != source:
                changes.update(fields)
        return dataclasses.replace(self, name=f"{self.name}-only-{source}", **changes)

    # -------------------------------------------------------------------------
    # Derived quantities
    # -------------------------------------------------------------------------

    def target_params(self) -> TwoLevelParams:
        """
        Two-level description of the driven cycling transition.

        A ``square-optimal`` pulse is square with duration √3π/Δl, Δl being
        the detuning of the unwanted transition; ``pulse_fwhm_ps`` is then
        ignored.
        """
        if self.pulse_shape == "square-optimal":
            shape = "square"
            duration = optimal_square_duration(
                abs(ghz_to_angular(self.cycling_splitting_ghz - self.laser_detuning_ghz))
            )
        else:
            shape, duration = self.pulse_shape, self.pulse_fwhm_ps * 1e-3
        return TwoLevelParams(
            gamma=self.gamma,
            delta_l=ghz_to_angular(self.laser_detuning_ghz),
            pulse_shape=shape,
            pulse_area=self.pulse_area_pi * math.pi,
            duration=duration,
        )

    def wrong_params(self) -> TwoLevelParams:
        """Two-level description of the unwanted transition, Δ − laser detuning away."""
        return dataclasses.replace(
            self.target_params(),
            delta_l=ghz_to_angular(self.cycling_splitting_ghz - self.laser_detuning_ghz),
        )

    @property
    def delta_tilde(self) -> float:
        """
        Unwanted-transition detuning in units of Γ/2, i.e. 2Δl/Γ with Δl in
        rad/ns. This is the argument of closed_form_offres_fidelity.
        """
        if self.gamma == 0:
            return math.inf
        delta_l = ghz_to_angular(self.cycling_splitting_ghz - self.laser_detuning_ghz)
        return 2.0 * abs(delta_l) / self.gamma

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _coerce(key: str, annotation: Any, value: Any) -> Any:
    kind = str(annotation)
    try:
        if kind == "bool":
            if isinstance(value, str):
                lowered = value.strip().lower()
                if lowered in ("true", "1", "yes", "on"):
                    return True
                if lowered in ("false", "0", "no", "off"):
                    return False
                raise ValueError(value)
            if isinstance(value, (bool, int)):
                return bool(value)
            raise ValueError(value)
        if kind == "float":
            if isinstance(value, bool):
                raise ValueError(value)
            return float(value)
        if kind == "str":
            if not isinstance(value, str):
                raise ValueError(value)
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"Scenario field '{key}' expects {kind}, got {value!r}") from None
    return value


# =============================================================================
# Preset Loading
# =============================================================================


def load_scenarios(path: str | Path) -> dict[str, ScenarioConfig]:
    """
    Parse a scenario TOML file, one section per scenario.

    Raises:
        ConfigError: If the file is missing, malformed or holds unknown keys
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Scenario file not found: {path}")
    try:
        with open(path, "rb") as f:
            document = tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"Cannot parse {path}: {exc}") from exc

    scenarios: dict[str, ScenarioConfig] = {}
    for name, section in document.items():
        if not isinstance(section, dict):
            raise ConfigError(f"{path}: top-level key '{name}' is not a [section]")
        scenarios[name] = ScenarioConfig.from_mapping(section, name=name)
    logger.debug("Loaded %d scenario(s) from %s", len(scenarios), path)
    return scenarios


_bundled_presets: dict[str, ScenarioConfig] | None = None


def _presets() -> dict[str, ScenarioConfig]:
    global _bundled_presets
    if _bundled_presets is None:
        _bundled_presets = load_scenarios(PRESETS_PATH)
    return _bundled_presets


def preset_names() -> list[str]:
    return list(_presets())


def get_preset(name: str, extra: Mapping[str, ScenarioConfig] | None = None) -> ScenarioConfig:
    """
    Look up a scenario by name.

    Args:
        name: Preset name (``inas-current``, ``inas-optimized``, ``gaas``, ``ideal``)
        extra: Scenarios from a user file; these shadow the bundled presets

    Raises:
        ConfigError: If no scenario has that name
    """
    if extra and name in extra:
        return extra[name]
    presets = _presets()
    if name not in presets:
        known = sorted(set(presets) | set(extra or {}))
        raise ConfigError(f"Unknown scenario '{name}'. Known: {', '.join(known)}")
    return presets[name]
