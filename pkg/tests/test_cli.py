"""Tests for the timebin-ghz command line."""

import csv
import json

import numpy as np
import pytest

from timebin_ghz import __version__
from timebin_ghz.analysis import ramsey_model
from timebin_ghz.cli import build_parser, main


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# =============================================================================
# Parser
# =============================================================================


class TestParser:
    def test_help_exits_cleanly(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        assert "simulate" in capsys.readouterr().out

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--warp-drive"])
        assert exc.value.code == 2

    def test_command_required(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_defaults(self):
        args = build_parser().parse_args(["simulate"])
        assert args.preset == "inas-current"
        assert args.n == 3
        assert args.seed == 0
        assert args.shots == 10_000
        assert args.overrides == []


# =============================================================================
# Budget
# =============================================================================


class TestBudgetCommand:
    def test_bundled_table(self, capsys):
        code, out, _ = _run(capsys, "budget")
        assert code == 0
        assert "Total source" in out
        assert "-18.89" in out.splitlines()[-1]

    def test_file_input(self, capsys, loss_budget_file):
        code, out, _ = _run(capsys, "budget", "--file", str(loss_budget_file))
        assert code == 0
        assert "-18.89" in out

    def test_writes_table_and_csv(self, capsys, tmp_path):
        code, out, _ = _run(capsys, "budget", "--out", str(tmp_path))
        assert code == 0
        assert out == ""
        assert (tmp_path / "loss_budget.txt").exists()
        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "budget"
        assert manifest["outputs"] == ["loss_budget.txt", "loss_budget.csv"]

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = _run(capsys, "budget", "--file", str(tmp_path / "absent.csv"))
        assert code == 2
        assert "not found" in err


# =============================================================================
# Simulate
# =============================================================================


class TestSimulateCommand:
    ARGS = ("simulate", "--preset", "ideal", "--n", "2", "--shots", "1000")

    def test_stdout_summary(self, capsys):
        code, out, _ = _run(capsys, *self.ARGS)
        assert code == 0
        summary = json.loads(out)
        assert summary["fidelity"]["value"] == 1.0
        assert summary["scenario"]["name"] == "ideal"

    def test_output_directory(self, capsys, tmp_path):
        code, _, _ = _run(capsys, *self.ARGS, "--seed", "3", "--out", str(tmp_path))
        assert code == 0
        assert {p.name for p in tmp_path.iterdir()} == {"summary.json", "shots.csv", "manifest.json"}
        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["seed"] == 3
        assert manifest["shots"] == 1000
        assert manifest["scenario"] == "ideal"
        assert manifest["argv"][0] == "simulate"
        with open(tmp_path / "shots.csv", newline="", encoding="utf-8") as f:
            assert len(list(csv.reader(f))) == 1 + 6 * 1000

    def test_rerun_is_byte_identical(self, capsys, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        _run(capsys, *self.ARGS, "--out", str(first))
        _run(capsys, *self.ARGS, "--out", str(second))
        assert (first / "summary.json").read_bytes() == (second / "summary.json").read_bytes()
        assert (first / "shots.csv").read_bytes() == (second / "shots.csv").read_bytes()

    def test_override_recorded(self, capsys, tmp_path):
        code, _, _ = _run(
            capsys, *self.ARGS, "--set", "readout_fidelity=0.9", "--out", str(tmp_path)
        )
        assert code == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["overrides"] == {"readout_fidelity": "0.9"}
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert summary["scenario"]["readout_fidelity"] == 0.9

    @pytest.mark.parametrize(
        "extra,message",
        [
            (("--set", "q_factor=high"), "expects float"),
            (("--set", "q_factor"), "KEY=VALUE"),
            (("--preset", "nope"), "Unknown scenario"),
            (("--shots", "10"), "shots must be"),
            (("--n", "8"), "at most n=7"),
        ],
    )
    def test_usage_errors(self, capsys, extra, message):
        code, _, err = _run(capsys, "simulate", "--n", "2", *extra)
        assert code == 2
        assert message in err

    def test_user_config(self, capsys, tmp_path):
        config = tmp_path / "mine.toml"
        config.write_text(
            "[perfect]\ncyclicity = inf\nq_factor = inf\nreadout_fidelity = 1.0\n"
            "init_fidelity = 1.0\ndephasing_rate = 0.0\nnuclear_noise_enabled = false\n"
            "off_resonant_enabled = false\npulse_area_pi = 1.0\nlaser_detuning_ghz = 0.0\n"
            "cycling_splitting_ghz = 30.0\n",
            encoding="utf-8",
        )
        code, out, _ = _run(
            capsys, "simulate", "--config", str(config), "--preset", "perfect",
            "--n", "2", "--shots", "1000",
        )
        assert code == 0
        assert json.loads(out)["fidelity"]["value"] == 1.0


# =============================================================================
# Echo, Fit, Sweep, Extrapolate
# =============================================================================


class TestEchoCommand:
    def test_curve(self, capsys):
        code, out, _ = _run(capsys, "echo", "--spacings", "5:20:4", "--realizations", "200")
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == ["spacing_ns", "visibility", "std_err", "expected"]
        assert [float(r[0]) for r in rows[1:]] == [5.0, 10.0, 15.0, 20.0]
        assert all(0.0 <= float(r[1]) <= 0.9 for r in rows[1:])

    def test_bad_range(self, capsys):
        code, _, err = _run(capsys, "echo", "--spacings", "5:20")
        assert code == 2
        assert "START:STOP:POINTS" in err


class TestFitCommand:
    def test_ramsey(self, capsys, tmp_path):
        path = tmp_path / "ramsey.csv"
        t = np.linspace(0, 100, 101)
        y = ramsey_model(t, 0.5, 0.4, 50.0, 0.3, 60.0)
        path.write_text(
            "delay_ns,population\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(t, y)),
            encoding="utf-8",
        )
        code, out, _ = _run(capsys, "fit", "ramsey", "--data", str(path))
        assert code == 0
        payload = json.loads(out)
        assert payload["kind"] == "ramsey"
        assert payload["params"]["t2_star"] == pytest.approx(60.0, rel=1e-6)

    def test_hom(self, capsys, tmp_path):
        path = tmp_path / "hom.csv"
        path.write_text("0.0,0.95\n0.02,0.91\n0.04,0.87\n", encoding="utf-8")
        code, out, _ = _run(capsys, "fit", "hom", "--data", str(path))
        assert code == 0
        assert json.loads(out)["params"]["f_slope"] == pytest.approx(2.0)

    def test_degenerate_data_is_runtime_error(self, capsys, tmp_path):
        path = tmp_path / "hom.csv"
        path.write_text("0.02,0.9\n0.02,0.8\n", encoding="utf-8")
        code, _, err = _run(capsys, "fit", "hom", "--data", str(path))
        assert code == 3
        assert "equal" in err

    def test_unparseable_row(self, capsys, tmp_path):
        path = tmp_path / "hom.csv"
        path.write_text("g2,v\n0.0,0.95\n0.02,oops\n", encoding="utf-8")
        code, _, err = _run(capsys, "fit", "hom", "--data", str(path))
        assert code == 2
        assert ":3:" in err


class TestSweepCommand:
    def test_readout_sweep(self, capsys):
        code, out, _ = _run(
            capsys, "sweep", "--preset", "ideal", "--param", "readout_fidelity",
            "--from", "1.0", "--to", "0.9", "--points", "2", "--shots", "1000",
        )
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == ["readout_fidelity", "fidelity", "std_err", "oracle"]
        assert float(rows[1][1]) == pytest.approx(1.0)
        assert float(rows[2][3]) == pytest.approx(0.85)

    def test_unknown_parameter(self, capsys):
        code, _, err = _run(
            capsys, "sweep", "--preset", "ideal", "--param", "warp", "--from", "0", "--to", "1"
        )
        assert code == 2
        assert "Cannot sweep" in err

    def test_log_needs_positive_bounds(self, capsys):
        code, _, err = _run(
            capsys, "sweep", "--param", "cyclicity", "--from", "0", "--to", "10", "--log"
        )
        assert code == 2
        assert "--log" in err


class TestExtrapolateCommand:
    def test_points_file(self, capsys, tmp_path):
        path = tmp_path / "points.csv"
        rows = "".join(f"{n},{0.5 + 0.45 * 0.9**n!r},0.005\n" for n in (1, 2, 3, 4))
        path.write_text("photons,fidelity,std_err\n" + rows, encoding="utf-8")
        code, out, _ = _run(capsys, "extrapolate", "--points-file", str(path))
        assert code == 0
        payload = json.loads(out)
        assert payload["b"] == pytest.approx(0.9, rel=1e-6)
        assert payload["decaying"] is True

    def test_points_file_writes_both_outputs(self, capsys, tmp_path):
        path = tmp_path / "points.csv"
        path.write_text("1,0.9,0.01\n2,0.85,0.01\n3,0.8,0.01\n", encoding="utf-8")
        out_dir = tmp_path / "out"
        code, _, _ = _run(capsys, "extrapolate", "--points-file", str(path), "--out", str(out_dir))
        assert code == 0
        assert (out_dir / "points.csv").exists()
        assert (out_dir / "extrapolation.json").exists()

    def test_fidelity_below_half_is_runtime_error(self, capsys, tmp_path):
        path = tmp_path / "points.csv"
        path.write_text("1,0.6,0.01\n2,0.5,0.01\n3,0.45,0.01\n", encoding="utf-8")
        code, _, err = _run(capsys, "extrapolate", "--points-file", str(path))
        assert code == 3
        assert "0.5" in err

    def test_bad_ns(self, capsys):
        code, _, err = _run(capsys, "extrapolate", "--preset", "ideal", "--ns", "2,three")
        assert code == 2
        assert "--ns" in err


# =============================================================================
# Reproducibility
# =============================================================================


class TestSameSeedSameOutput:
    """A noisy scenario run twice with one seed prints the same bytes."""

    COMMON = ("--preset", "inas-current", "--shots", "1000", "--seed", "11")

    @pytest.mark.parametrize(
        "argv",
        [
            ("simulate", "--n", "2"),
            ("budget", "--errors", "--n", "2"),
            ("sweep", "--param", "readout_fidelity", "--from", "1.0", "--to", "0.9",
             "--points", "2", "--n", "2"),
        ],
        ids=["simulate", "budget-errors", "sweep"],
    )
    def test_stdout_repeats(self, capsys, argv):
        code_a, first, _ = _run(capsys, *argv, *self.COMMON)
        code_b, second, _ = _run(capsys, *argv, *self.COMMON)
        assert code_a == code_b == 0
        assert first
        assert first == second

    def test_seed_changes_estimate(self, capsys):
        _, first, _ = _run(capsys, "simulate", "--n", "2", *self.COMMON)
        _, other, _ = _run(
            capsys, "simulate", "--n", "2", "--preset", "inas-current",
            "--shots", "1000", "--seed", "12",
        )
        assert json.loads(first)["fidelity"] != json.loads(other)["fidelity"]

    def test_thread_count_does_not_change_output(self, capsys):
        _, serial, _ = _run(capsys, "simulate", "--n", "2", *self.COMMON)
        _, parallel, _ = _run(capsys, "simulate", "--n", "2", *self.COMMON, "--threads", "2")
        assert serial == parallel
