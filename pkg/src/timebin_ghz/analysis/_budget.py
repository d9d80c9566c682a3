"""
Photon-loss budget and GHZ generation-rate estimate.

A budget is an ordered list of named stages with an efficiency and a group
("source" for quantum dot to collection fiber, "detection" for state
characterization). Totals are products; losses are reported in dB.

Example:
    >>> from timebin_ghz.analysis import default_loss_budget
    >>> budget = default_loss_budget()
    >>> round(budget.group_efficiency("source"), 4)
    0.1149
    >>> round(budget.overall_db, 1)
    -18.9
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from timebin_ghz._errors import ConfigError, InvalidArgumentError

__all__ = [
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

logger = logging.getLogger(__name__)

LOSS_BUDGET_PATH = Path(__file__).parent.parent / "data" / "photon_losses.csv"

DEFAULT_GROUP = "total"


def to_db(efficiency: float) -> float:
    """10·log10(efficiency)."""
    if not efficiency > 0:
        raise InvalidArgumentError(f"efficiency must be > 0, got {efficiency}")
    return 10.0 * math.log10(efficiency)


@dataclass(frozen=True)
class Stage:
    name: str
    efficiency: float
    group: str = DEFAULT_GROUP

    def __post_init__(self) -> None:
        if not 0.0 < self.efficiency <= 1.0:
            raise InvalidArgumentError(
                f"Stage '{self.name}': efficiency must lie in (0, 1], got {self.efficiency}"
            )

    @property
    def db(self) -> float:
        return to_db(self.efficiency)


@dataclass(frozen=True)
class LossBudget:
    """Ordered stages with per-group and overall products."""

    stages: tuple[Stage, ...]

    @property
    def groups(self) -> list[str]:
        seen: list[str] = []
        for stage in self.stages:
            if stage.group not in seen:
                seen.append(stage.group)
        return seen

    def group_efficiency(self, group: str) -> float:
        members = [s.efficiency for s in self.stages if s.group == group]
        if not members:
            raise InvalidArgumentError(f"No stages in group '{group}'")
        return math.prod(members)

    @property
    def overall(self) -> float:
        return math.prod(s.efficiency for s in self.stages)

    @property
    def overall_db(self) -> float:
        return to_db(self.overall)

    def to_table(self) -> str:
        """Aligned text table with a subtotal per group and the overall total."""
        width = max([len(s.name) for s in self.stages] + [len("Overall")]) + 2
        lines = [f"{'Stage':<{width}}{'Efficiency %':>14}{'Loss (dB)':>12}"]
        lines.append("-" * len(lines[0]))
        for group in self.groups:
            for stage in (s for s in self.stages if s.group == group):
                lines.append(
                    f"{stage.name:<{width}}{100 * stage.efficiency:>14.1f}{stage.db:>12.2f}"
                )
            if len(self.groups) > 1:
                eff = self.group_efficiency(group)
                label = f"Total {group}"
                lines.append(f"{label:<{width}}{100 * eff:>14.1f}{to_db(eff):>12.2f}")
                lines.append("")
        lines.append(
            f"{'Overall':<{width}}{100 * self.overall:>14.1f}{self.overall_db:>12.2f}"
        )
        return "\n".join(lines)

    def to_csv(self, path: str | Path | None = None) -> str:
        """CSV with stage rows, then group and overall totals; written if a path is given."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["stage", "efficiency", "group", "loss_db"])
        for stage in self.stages:
            writer.writerow([stage.name, repr(stage.efficiency), stage.group, repr(stage.db)])
        for group in self.groups:
            eff = self.group_efficiency(group)
            writer.writerow([f"total:{group}", repr(eff), group, repr(to_db(eff))])
        writer.writerow(["total", repr(self.overall), "", repr(self.overall_db)])
        text = buffer.getvalue()
        if path is not None:
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        return text


def efficiency_budget(stages: Iterable[Stage | Sequence]) -> LossBudget:
    """
    Build a LossBudget from Stage objects or (name, efficiency[, group]) rows.

    Raises:
        InvalidArgumentError: On an efficiency outside (0, 1] or an empty list
    """
    built: list[Stage] = []
    for item in stages:
        if isinstance(item, Stage):
            built.append(item)
            continue
        row = tuple(item)
        if len(row) not in (2, 3):
            raise InvalidArgumentError(f"Stage rows need 2 or 3 fields, got {row!r}")
        name, eff = str(row[0]), float(row[1])
        group = str(row[2]) if len(row) == 3 and row[2] else DEFAULT_GROUP
        built.append(Stage(name, eff, group))
    if not built:
        raise InvalidArgumentError("A loss budget needs at least one stage")
    return LossBudget(tuple(built))


def loss_budget_from_csv(path: str | Path) -> LossBudget:
    """
    Read a budget CSV: columns stage, efficiency and optionally group.

    A header row is detected by a non-numeric efficiency field. Efficiencies
    above 1 are read as percentages.

    Raises:
        ConfigError: If the file is missing or a row cannot be parsed
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Budget file not found: {path}")
    rows = []
    header_seen = False
    with open(path, "r", encoding="utf-8", newline="") as f:
        for lineno, record in enumerate(csv.reader(f), start=1):
            if not record or not any(cell.strip() for cell in record):
                continue
            if record[0].lstrip().startswith("#"):
                continue
            try:
                eff = float(record[1])
            except (IndexError, ValueError):
                if not rows and not header_seen:
                    header_seen = True
                    continue
                raise ConfigError(f"{path}:{lineno}: cannot parse efficiency in {record!r}") from None
            if eff > 1.0:
                eff /= 100.0
            group = record[2].strip() if len(record) > 2 else ""
            rows.append((record[0].strip(), eff, group))
    logger.debug("Read %d budget stages from %s", len(rows), path)
    return efficiency_budget(rows)


def default_loss_budget() -> LossBudget:
    """The bundled twelve-stage budget of the time-bin experiment."""
    return loss_budget_from_csv(LOSS_BUDGET_PATH)


def photon_efficiency(budget: LossBudget, stage_names: Iterable[str]) -> float:
    """Product of the efficiencies of the named stages."""
    by_name = {s.name: s.efficiency for s in budget.stages}
    names = list(stage_names)
    missing = [n for n in names if n not in by_name]
    if missing:
        raise InvalidArgumentError(f"Unknown stage(s): {', '.join(missing)}")
    return math.prod(by_name[n] for n in names)


def ghz_rate(eta_p: float, r_exp: float, n_photons: int = 2) -> float:
    """
    GHZ generation rate η_p^N · R_exp in Hz.

    Example:
        >>> round(ghz_rate(0.342, 560e3, 2) / 1e3, 1)
        65.5
    """
    if not 0.0 < eta_p <= 1.0:
        raise InvalidArgumentError(f"eta_p must lie in (0, 1], got {eta_p}")
    if not r_exp > 0:
        raise InvalidArgumentError(f"r_exp must be > 0, got {r_exp}")
    if n_photons < 0:
        raise InvalidArgumentError(f"n_photons must be >= 0, got {n_photons}")
    return eta_p**n_photons * r_exp
