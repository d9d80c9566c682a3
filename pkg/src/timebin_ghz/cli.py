"""
Command-line entry point: ``timebin-ghz <command> [options]``.

Commands:
    simulate     Estimate ⟨P̂z⟩, ⟨M̂k⟩, ⟨χ̂⟩ and F for one scenario
    budget       Photon-loss budget table, or the leave-one-out error budget
    echo         Spin-echo visibility curve from the nuclear-noise model
    fit          Fit Ramsey, Rabi, HOM or optical-pumping data
    sweep        F against one scenario parameter, with the oracle overlay
    extrapolate  F over qubit number and the exponential outlook fit

Data go to stdout (or to files under ``--out``); logs go to stderr. Every
``--out`` directory receives a ``manifest.json`` describing the run.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from timebin_ghz import __version__
from timebin_ghz._errors import ConfigError, InvalidArgumentError, TimebinGHZError
from timebin_ghz.analysis import (
    default_loss_budget,
    fit_cyclicity,
    fit_rabi,
    fit_ramsey,
    hom_regression,
    loss_budget_from_csv,
)
from timebin_ghz.channels import ScenarioConfig, get_preset, load_scenarios
from timebin_ghz.montecarlo import (
    DEFAULT_SHOTS,
    error_budget,
    estimate_fidelity,
    extrapolate,
    outlook,
)
from timebin_ghz.montecarlo import sweep as run_sweep
from timebin_ghz.nuclear import (
    default_spectrum,
    echo_curve,
    expected_echo_visibility,
    load_spectrum,
)

__all__ = ["main", "build_parser", "RunManifest"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3


# =============================================================================
# Manifest
# =============================================================================


@dataclass
class RunManifest:
    """Provenance record written beside every output file."""

    command: str
    argv: list[str]
    scenario: str | None = None
    overrides: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    shots: int | None = None
    threads: int | None = None
    outputs: list[str] = field(default_factory=list)
    version: str = __version__
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    def write(self, directory: Path) -> Path:
        path = directory / "manifest.json"
        with open(path, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=2)
            f.write("\n")
        return path


# =============================================================================
# Parser
# =============================================================================


def _add_scenario_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("scenario")
    group.add_argument("--preset", default="inas-current", help="Scenario name (default: inas-current)")
    group.add_argument("--config", type=Path, help="TOML file with extra or overriding scenarios")
    group.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one scenario field (repeatable)",
    )


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("run")
    group.add_argument("--seed", type=int, default=0, help="Root RNG seed (default: 0)")
    group.add_argument("--threads", type=int, default=1, help="Worker processes (default: 1)")
    group.add_argument(
        "--shots", type=int, default=DEFAULT_SHOTS,
        help=f"Shots per measurement setting (default: {DEFAULT_SHOTS})",
    )


def _add_output_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, help="Output directory (default: print to stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timebin-ghz",
        description="Monte Carlo and analysis tools for time-bin GHZ states from a quantum-dot spin.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More log output (repeatable)")
    parser.add_argument("--quiet", action="store_true", help="Only log errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Estimate the GHZ fidelity of a scenario")
    _add_scenario_options(p)
    _add_run_options(p)
    _add_output_option(p)
    p.add_argument("--n", type=int, default=3, help="Number of qubits, spin included (default: 3)")

    p = sub.add_parser("budget", help="Photon-loss budget or leave-one-out error budget")
    p.add_argument("--file", type=Path, help="Loss budget CSV (stage, efficiency[, group])")
    p.add_argument("--errors", action="store_true", help="Run the Monte Carlo error budget instead")
    p.add_argument("--n", type=int, default=3, help="Qubits for --errors (default: 3)")
    _add_scenario_options(p)
    _add_run_options(p)
    _add_output_option(p)

    p = sub.add_parser("echo", help="Spin-echo visibility against pulse spacing")
    _add_scenario_options(p)
    p.add_argument("--spacings", default="1:60:60", help="START:STOP:POINTS in ns (default: 1:60:60)")
    p.add_argument("--n-pi", type=int, choices=(1, 3), default=1, help="π-pulses in the echo")
    p.add_argument("--amplitude", type=float, help="Noise amplitude A (default: scenario value)")
    p.add_argument("--spectrum", type=Path, help="PSD file (default: synthetic nuclear spectrum)")
    p.add_argument("--realizations", type=int, default=2000, help="Noise realizations per point")
    p.add_argument("--seed", type=int, default=0, help="Seed of the noise phases (default: 0)")
    _add_output_option(p)

    p = sub.add_parser("fit", help="Fit spectroscopy data from a two-column CSV")
    p.add_argument("kind", choices=("ramsey", "rabi", "hom", "cyclicity"))
    p.add_argument("--data", type=Path, required=True, help="CSV of (x, y) rows")
    p.add_argument("--gamma", type=float, default=1 / 0.235, help="Γ in 1/ns (cyclicity)")
    p.add_argument(
        "--sigma-e", type=float, default=2 * math.pi * 0.532,
        help="Spectral diffusion σe in rad/ns (cyclicity)",
    )
    _add_output_option(p)

    p = sub.add_parser("sweep", help="Fidelity against one scenario parameter")
    _add_scenario_options(p)
    _add_run_options(p)
    _add_output_option(p)
    p.add_argument("--param", required=True, help="Scenario field to vary")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--log", action="store_true", help="Space the points logarithmically")
    p.add_argument("--n", type=int, default=2, help="Number of qubits (default: 2)")

    p = sub.add_parser("extrapolate", help="Fidelity over qubit number and the outlook fit")
    _add_scenario_options(p)
    _add_run_options(p)
    _add_output_option(p)
    p.add_argument("--ns", default="2,3,4", help="Comma-separated qubit numbers (default: 2,3,4)")
    p.add_argument("--points-file", type=Path, help="CSV of (photons, F, sigma) instead of simulating")

    return parser


# =============================================================================
# Helpers
# =============================================================================


def _configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def _parse_overrides(items: Sequence[str]) -> dict[str, str]:
    overrides = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got '{item}'")
        overrides[key.strip()] = value.strip()
    return overrides


def _resolve_scenario(args: argparse.Namespace) -> tuple[ScenarioConfig, dict[str, str]]:
    extra = load_scenarios(args.config) if args.config else None
    scenario = get_preset(args.preset, extra)
    overrides = _parse_overrides(args.overrides)
    if overrides:
        scenario = scenario.with_overrides(**overrides)
    return scenario, overrides


def _parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"Expected START:STOP:POINTS, got '{text}'")
    try:
        start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"Cannot parse range '{text}'") from None
    if points < 1:
        raise ConfigError(f"Range needs at least one point, got {points}")
    return np.linspace(start, stop, points)


def _read_pairs(path: Path, columns: int = 2) -> list[tuple[float, ...]]:
    if not path.exists():
        raise ConfigError(f"Data file not found: {path}")
    rows: list[tuple[float, ...]] = []
    header_seen = False
    with open(path, "r", encoding="utf-8", newline="") as f:
        for lineno, record in enumerate(csv.reader(f), start=1):
            if not record or record[0].lstrip().startswith("#"):
                continue
            try:
                rows.append(tuple(float(cell) for cell in record[:columns]))
            except ValueError:
                if not rows and not header_seen:
                    header_seen = True
                    continue
                raise ConfigError(f"{path}:{lineno}: cannot parse {record!r}") from None
    return rows


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _emit(
    args: argparse.Namespace, manifest: RunManifest, files: dict[str, str], stdout_key: str
) -> None:
    """Write ``files`` under --out (with the manifest) or print one of them."""
    if args.out is None:
        sys.stdout.write(files[stdout_key])
        return
    args.out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (args.out / name).write_text(text, encoding="utf-8")
        manifest.outputs.append(name)
    manifest.write(args.out)
    logger.info("Wrote %s to %s", ", ".join(files), args.out)


def _jsonable(value: Any) -> Any:
    """Non-finite floats become strings ("inf", "nan"); JSON has no literal for them."""
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    return value


def _json_text(data: Any) -> str:
    return json.dumps(_jsonable(data), indent=2) + "\n"


# =============================================================================
# Commands
# =============================================================================


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario, overrides = _resolve_scenario(args)
    result = estimate_fidelity(
        scenario, args.n, args.shots, args.seed,
        threads=args.threads, keep_records=args.out is not None,
    )
    manifest = RunManifest(
        "simulate", args.argv, scenario.name, overrides, args.seed, args.shots, args.threads
    )
    summary = _json_text(result.to_dict())
    files = {"summary.json": summary}
    if args.out is not None:
        result.write_records_csv(args.out / "shots.csv")
        manifest.outputs.append("shots.csv")
    _emit(args, manifest, files, "summary.json")
    return EXIT_OK


def cmd_budget(args: argparse.Namespace) -> int:
    if args.errors:
        scenario, overrides = _resolve_scenario(args)
        rows = error_budget(scenario, args.n, args.shots, args.seed, threads=args.threads)
        manifest = RunManifest(
            "budget", args.argv, scenario.name, overrides, args.seed, args.shots, args.threads
        )
        text = _csv_text(
            ["source", "infidelity", "std_err", "fidelity_without"],
            [(r.source, r.infidelity, r.std_err, r.fidelity_without) for r in rows],
        )
        _emit(args, manifest, {"error_budget.csv": text}, "error_budget.csv")
        return EXIT_OK

    budget = loss_budget_from_csv(args.file) if args.file else default_loss_budget()
    manifest = RunManifest("budget", args.argv)
    files = {"loss_budget.txt": budget.to_table() + "\n", "loss_budget.csv": budget.to_csv()}
    _emit(args, manifest, files, "loss_budget.txt")
    return EXIT_OK


def cmd_echo(args: argparse.Namespace) -> int:
    scenario, overrides = _resolve_scenario(args)
    spacings = _parse_range(args.spacings)
    spectrum = load_spectrum(args.spectrum) if args.spectrum else default_spectrum(scenario.b_field)
    amplitude = scenario.nuclear_amplitude if args.amplitude is None else args.amplitude
    curve = echo_curve(
        spectrum, amplitude, spacings, n_pi=args.n_pi,
        n_realizations=args.realizations, rng_seed=args.seed,
    )
    rows = [
        (
            r.spacing,
            r.visibility,
            r.std_err,
            expected_echo_visibility(spectrum, amplitude, r.spacing, args.n_pi),
        )
        for r in curve
    ]
    manifest = RunManifest(
        "echo", args.argv, scenario.name, overrides, args.seed, args.realizations
    )
    text = _csv_text(["spacing_ns", "visibility", "std_err", "expected"], rows)
    _emit(args, manifest, {"echo.csv": text}, "echo.csv")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    data = _read_pairs(args.data)
    if args.kind == "ramsey":
        fit = fit_ramsey(data)
        payload = {"params": fit.params, "std_errs": fit.std_errs, "flags": list(fit.flags)}
    elif args.kind == "rabi":
        fit = fit_rabi(data)
        payload = {"params": fit.params, "std_errs": fit.std_errs, "flags": list(fit.flags)}
    elif args.kind == "hom":
        hom = hom_regression(data)
        payload = {
            "params": {"v_s": hom.v_s, "f_slope": hom.f_slope},
            "std_errs": {"v_s": hom.v_s_err, "f_slope": hom.f_slope_err},
        }
    else:
        cyc = fit_cyclicity(data, args.gamma, args.sigma_e)
        payload = {
            "params": {"gamma_y": cyc.gamma_y, "cyclicity": cyc.cyclicity},
            "std_errs": {"gamma_y": cyc.gamma_y_err, "cyclicity": cyc.cyclicity_err},
        }
    payload = {"kind": args.kind, **payload}
    manifest = RunManifest("fit", args.argv)
    _emit(args, manifest, {"fit.json": _json_text(payload)}, "fit.json")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario, overrides = _resolve_scenario(args)
    if args.points < 1:
        raise ConfigError(f"--points must be >= 1, got {args.points}")
    if args.log:
        if not (args.start > 0 and args.stop > 0):
            raise ConfigError("--log needs positive --from and --to")
        values = np.geomspace(args.start, args.stop, args.points)
    else:
        values = np.linspace(args.start, args.stop, args.points)
    rows = run_sweep(
        scenario, args.param, [float(v) for v in values], args.n, args.shots, args.seed,
        threads=args.threads,
    )
    manifest = RunManifest(
        "sweep", args.argv, scenario.name, overrides, args.seed, args.shots, args.threads
    )
    text = _csv_text(
        [args.param, "fidelity", "std_err", "oracle"],
        [(r.value, r.fidelity, r.std_err, r.oracle) for r in rows],
    )
    _emit(args, manifest, {"sweep.csv": text}, "sweep.csv")
    return EXIT_OK


def cmd_extrapolate(args: argparse.Namespace) -> int:
    manifest = RunManifest("extrapolate", args.argv, seed=args.seed)
    if args.points_file:
        points = [(int(p[0]), p[1], p[2]) for p in _read_pairs(args.points_file, columns=3)]
        fit = extrapolate(points)
    else:
        scenario, overrides = _resolve_scenario(args)
        try:
            ns = [int(v) for v in args.ns.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"--ns expects comma-separated integers, got '{args.ns}'") from None
        run = outlook(scenario, ns, args.shots, args.seed, threads=args.threads)
        fit = run.fit
        points = [(n - 1, r.fidelity.value, r.fidelity.std_err) for n, r in run.results.items()]
        manifest.scenario = scenario.name
        manifest.overrides = overrides
        manifest.shots = args.shots
        manifest.threads = args.threads
    payload = {
        "model": "F(N) = 0.5 + a * b**N, N = photons",
        "a": fit.a,
        "b": fit.b,
        "per_photon_infidelity": fit.per_photon_infidelity,
        "covariance": fit.covariance.tolist(),
        "decaying": fit.decaying,
        "n_max_qubits": fit.n_max,
    }
    files = {
        "points.csv": _csv_text(["photons", "fidelity", "std_err"], points),
        "extrapolation.json": _json_text(payload),
    }
    _emit(args, manifest, files, "extrapolation.json")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "budget": cmd_budget,
    "echo": cmd_echo,
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "extrapolate": cmd_extrapolate,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    args.argv = argv
    _configure_logging(args.verbose, args.quiet)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"timebin-ghz {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TimebinGHZError as exc:
        print(f"timebin-ghz {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
