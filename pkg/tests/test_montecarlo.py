"""Tests for trajectory sampling, fidelity estimation, oracles and extrapolation."""

import csv
import json
import math

import numpy as np
import pytest

from timebin_ghz import (
    ConfigError,
    EstimationError,
    FitError,
    InvalidArgumentError,
    simulate,
)
from timebin_ghz.montecarlo import (
    MIN_SHOTS,
    ChannelRates,
    ShotRecord,
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
from timebin_ghz.pulses import MeasurementSetting, build_experiment_cycle

GAMMA = 1 / 0.235


# Off-resonant excitation alone, driven by square pulses of the optimal duration.
OFFRES_ONLY = {
    "off_resonant_enabled": True,
    "reexcitation_enabled": False,
    "pulse_shape": "square-optimal",
}


def _within(estimate, expected, sigmas=3.0):
    return abs(estimate.value - expected) <= sigmas * estimate.std_err


# =============================================================================
# Single Trajectories
# =============================================================================


class TestTrajectory:
    def test_ideal_z_shot(self, ideal):
        setting = MeasurementSetting(3, 0, 0)
        sequence = build_experiment_cycle(3, setting=setting)
        record = run_trajectory(sequence, ideal, setting, np.random.default_rng(0))
        if record.accepted:
            assert len(record.bits) == 3
            assert len(set(record.bits)) == 1
        assert record.events == ()

    def test_rejected_shot_has_no_bits(self, ideal):
        # Without excitation no slot ever holds a photon.
        dark = ideal.with_overrides(pulse_area_pi=0.0)
        setting = MeasurementSetting(2, 0, 1)
        sequence = build_experiment_cycle(2, setting=setting)
        for seed in range(5):
            record = run_trajectory(sequence, dark, setting, np.random.default_rng(seed))
            assert not record.accepted
            assert record.bits == ()

    def test_channel_rates_ideal(self, ideal):
        rates = ChannelRates.from_scenario(ideal)
        assert rates.p_wrong == 0.0
        assert rates.p_f == 0.0
        assert rates.emission[2] == 0.0
        assert sum(a**2 for a in rates.emission) == pytest.approx(1.0)

    def test_channel_rates_current_device(self, inas_current):
        rates = ChannelRates.from_scenario(inas_current)
        assert 0 < rates.p_wrong < 1
        assert rates.p_f == pytest.approx(0.0145, abs=5e-5)
        assert rates.emission[2] > 0

    def test_channel_rates_without_reexcitation(self, inas_current):
        full = ChannelRates.from_scenario(inas_current)
        folded = ChannelRates.from_scenario(inas_current.with_overrides(reexcitation_enabled=False))
        assert folded.emission[2] == 0.0
        assert folded.p_wrong == pytest.approx(full.p_wrong)
        assert folded.emission[1] ** 2 == pytest.approx(full.emission[1] ** 2 + full.emission[2] ** 2)

    @pytest.mark.parametrize("config", [0, 1])
    def test_spin_flips_only_between_emissions(self, ideal, config):
        # Q this small resets the spin on every rotation it reaches.
        scenario = ideal.with_overrides(q_factor=0.01)
        setting = MeasurementSetting(3, 0, config)
        sequence = build_experiment_cycle(3, setting=setting)
        record = run_trajectory(sequence, scenario, setting, np.random.default_rng(3))
        times = [e.start_time for e in sequence.excitations]
        flips = [e.location for e in record.events if e.kind == "laser_spin_flip"]
        assert len(flips) == 3
        for location in flips:
            assert min(times) < sequence[location].start_time < max(times)

    def test_outcome_strings(self):
        assert ShotRecord(0, (0, 1, 1), 1.0).outcome_string() == "011"
        assert ShotRecord(2, (1, -1, 1), 0.5).outcome_string(equatorial=True) == "+-+"
        rejected = ShotRecord(1, (), 0.0)
        assert not rejected.accepted
        assert rejected.outcome_string() == ""


# =============================================================================
# Estimators
# =============================================================================


class TestWeightedEstimate:
    def test_mean_and_error(self):
        est = weighted_estimate([1.0, 0.0], [1.0, 1.0])
        assert est.value == pytest.approx(0.5)
        assert est.std_err == pytest.approx(math.sqrt(0.5) / 2)

    def test_weights_shift_mean(self):
        assert weighted_estimate([1.0, 0.0], [3.0, 1.0]).value == pytest.approx(0.75)

    def test_zero_weight(self):
        with pytest.raises(EstimationError, match="total weight is zero"):
            weighted_estimate([1.0, -1.0], [0.0, 0.0])


class TestEstimateFidelity:
    @pytest.mark.parametrize("n", [2, 3])
    def test_ideal_is_perfect(self, ideal, n):
        result = estimate_fidelity(ideal, n, shots=MIN_SHOTS, rng_seed=4)
        assert result.pz.value == pytest.approx(1.0, abs=1e-12)
        assert result.chi.value == pytest.approx(1.0, abs=1e-12)
        assert result.fidelity.value == pytest.approx(1.0, abs=1e-12)
        assert result.shots_total == 2 * (n + 1) * MIN_SHOTS

    def test_three_qubit_sign_pattern(self, ideal):
        result = estimate_fidelity(ideal, 3, shots=MIN_SHOTS, rng_seed=2)
        assert [round(m.value) for m in result.mk] == [-1, 1, -1]

    def test_top_level_simulate(self):
        assert simulate("ideal", n=2, shots=MIN_SHOTS).fidelity.value == pytest.approx(1.0)

    def test_too_few_shots(self, ideal):
        with pytest.raises(InvalidArgumentError, match="shots must be >= 1000"):
            estimate_fidelity(ideal, 2, shots=999)

    def test_bad_thread_count(self, ideal):
        with pytest.raises(InvalidArgumentError, match="threads"):
            estimate_fidelity(ideal, 2, shots=MIN_SHOTS, threads=0)

    def test_nothing_accepted(self, ideal):
        dark = ideal.with_overrides(pulse_area_pi=0.0)
        with pytest.raises(EstimationError, match="accepted none"):
            estimate_fidelity(dark, 2, shots=MIN_SHOTS)


class TestDeterminism:
    @pytest.fixture(scope="class")
    def noisy(self):
        from timebin_ghz.channels import get_preset

        return get_preset("ideal").with_overrides(readout_fidelity=0.9, dephasing_rate=0.2)

    def test_same_seed_same_result(self, noisy):
        a = estimate_fidelity(noisy, 2, shots=MIN_SHOTS, rng_seed=17)
        b = estimate_fidelity(noisy, 2, shots=MIN_SHOTS, rng_seed=17)
        assert a.to_dict() == b.to_dict()

    def test_independent_of_worker_count(self, noisy):
        serial = estimate_fidelity(noisy, 2, shots=MIN_SHOTS, rng_seed=17, threads=1)
        parallel = estimate_fidelity(noisy, 2, shots=MIN_SHOTS, rng_seed=17, threads=2)
        assert serial.to_dict() == parallel.to_dict()

    def test_seed_changes_result(self, noisy):
        a = estimate_fidelity(noisy, 2, shots=MIN_SHOTS, rng_seed=1)
        b = estimate_fidelity(noisy, 2, shots=MIN_SHOTS, rng_seed=2)
        assert a.fidelity.value != b.fidelity.value


# =============================================================================
# Single-Error Oracles
# =============================================================================


class TestAnalyticOracle:
    def test_cyclicity(self):
        assert analytic_oracle("cyclicity", 2, cyclicity=36) == pytest.approx(0.9797, abs=1e-4)

    def test_readout(self):
        assert analytic_oracle("readout", 2, readout_fidelity=0.98) == pytest.approx(0.97)

    def test_init(self):
        assert analytic_oracle("init", 5, init_fidelity=0.99) == 0.99

    def test_dephasing(self):
        value = analytic_oracle("dephasing", 1, dephasing_rate=0.069, gamma=GAMMA)
        assert value == pytest.approx(0.5 + 0.5 * GAMMA / (GAMMA + 0.138))

    def test_spin_flip_first_order(self):
        value = analytic_oracle("spin_flip_first_order", 2, q_factor=34)
        p_f = 0.5 * (1 - math.exp(-1 / 34))
        assert value == pytest.approx(0.5 * (1 - 3 * p_f + math.exp(-3 / 34)))

    def test_spin_flip_single_photon(self):
        p_f = 0.5 * (1 - math.exp(-1 / 10))
        value = analytic_oracle("spin_flip", 1, q_factor=10)
        assert value == pytest.approx(0.5 * (1 - p_f / 2 + math.exp(-1 / 10)))

    @pytest.mark.parametrize("n_photons", [2, 3])
    def test_spin_flip_near_first_order(self, n_photons):
        p_f = 0.5 * (1 - math.exp(-1 / 34))
        exact = analytic_oracle("spin_flip", n_photons, q_factor=34)
        first = analytic_oracle("spin_flip_first_order", n_photons, q_factor=34)
        assert 0 < exact - first < p_f / 2

    def test_offres_decreases_with_photons(self):
        assert analytic_oracle("offres", 3, delta_tilde=17.7) < analytic_oracle(
            "offres", 1, delta_tilde=17.7
        )

    @pytest.mark.parametrize(
        "channel,params",
        [("cyclicity", {"cyclicity": math.inf}), ("spin_flip", {"q_factor": math.inf})],
    )
    def test_disabled_sources_are_perfect(self, channel, params):
        assert analytic_oracle(channel, 3, **params) == 1.0

    def test_unknown_channel(self):
        with pytest.raises(InvalidArgumentError, match="Unknown oracle channel"):
            analytic_oracle("gravity", 2)

    def test_missing_parameter(self):
        with pytest.raises(InvalidArgumentError, match="Missing oracle parameter"):
            analytic_oracle("dephasing", 2, dephasing_rate=0.1)

    def test_needs_a_photon(self):
        with pytest.raises(InvalidArgumentError, match="n_photons"):
            analytic_oracle("init", 0, init_fidelity=0.9)

    def test_scenario_oracle_maps_source_names(self, inas_current):
        assert scenario_oracle(inas_current, "initialization", 2) == 0.99
        assert scenario_oracle(inas_current, "readout", 2) == pytest.approx(0.97)


class TestOracleAgreement:
    """Monte Carlo with one error source against its closed form."""

    @pytest.mark.parametrize("n", [2, 3, 4])
    @pytest.mark.parametrize(
        "overrides,channel",
        [
            ({"readout_fidelity": 0.9}, "readout"),
            ({"init_fidelity": 0.9}, "init"),
            ({"dephasing_rate": 0.2}, "dephasing"),
            ({"cyclicity": 36.0}, "cyclicity"),
            ({"q_factor": 10.0}, "spin_flip"),
            (dict(OFFRES_ONLY, cycling_splitting_ghz=30.0), "offres"),
        ],
    )
    def test_single_source(self, ideal, overrides, channel, n):
        scenario = ideal.with_overrides(**overrides)
        result = estimate_fidelity(scenario, n, shots=MIN_SHOTS, rng_seed=8)
        expected = scenario_oracle(scenario, channel, n - 1)
        assert _within(result.fidelity, expected)

    @pytest.mark.parametrize("splitting_ghz", [10.0, 30.0, 100.0])
    def test_offres_over_detuning(self, ideal, splitting_ghz):
        scenario = ideal.with_overrides(**OFFRES_ONLY, cycling_splitting_ghz=splitting_ghz)
        result = estimate_fidelity(scenario, 3, shots=MIN_SHOTS, rng_seed=5)
        assert _within(result.fidelity, scenario_oracle(scenario, "offres", 2))

    def test_offres_sweep_follows_closed_form(self, ideal):
        scenario = ideal.with_overrides(**OFFRES_ONLY)
        rows = sweep(scenario, "cycling_splitting_ghz", [10.0, 30.0, 100.0], 3, shots=MIN_SHOTS)
        assert all(row.oracle is not None for row in rows)
        for row in rows:
            assert abs(row.fidelity - row.oracle) <= 3 * row.std_err
        assert rows[0].fidelity < rows[-1].fidelity

    def test_spin_flips_lower_fidelity(self, ideal):
        good = estimate_fidelity(ideal.with_overrides(q_factor=100.0), 2, shots=MIN_SHOTS)
        bad = estimate_fidelity(ideal.with_overrides(q_factor=10.0), 2, shots=MIN_SHOTS)
        assert bad.fidelity.value < good.fidelity.value < 1.0


# =============================================================================
# Extrapolation
# =============================================================================


class TestExtrapolate:
    @staticmethod
    def _points(a=0.45, b=0.9, sigma=0.005):
        return [(n, 0.5 + a * b**n, sigma) for n in (1, 2, 3, 4)]

    def test_recovers_decay(self):
        fit = extrapolate(self._points())
        assert fit.a == pytest.approx(0.45, rel=1e-6)
        assert fit.b == pytest.approx(0.9, rel=1e-6)
        assert fit.per_photon_infidelity == pytest.approx(0.1, rel=1e-5)
        assert fit.decaying
        assert fit.n_max is not None and fit.n_max > 5

    def test_prediction_has_uncertainty(self):
        fit = extrapolate(self._points())
        value, err = fit.predict(2)
        assert value == pytest.approx(0.5 + 0.45 * 0.81, rel=1e-6)
        assert err > 0

    def test_growing_data(self):
        fit = extrapolate([(n, 0.5 + 0.1 * 1.1**n, 0.01) for n in (1, 2, 3)])
        assert not fit.decaying
        assert fit.n_max is None

    def test_unweighted_points(self):
        fit = extrapolate(self._points(sigma=0.0))
        assert fit.b == pytest.approx(0.9, rel=1e-6)

    def test_too_few_points(self):
        with pytest.raises(InvalidArgumentError, match=">= 3 points"):
            extrapolate(self._points()[:2])

    def test_below_half(self):
        with pytest.raises(FitError, match="exceed 0.5"):
            extrapolate([(1, 0.7, 0.01), (2, 0.6, 0.01), (3, 0.5, 0.01)])


class TestOutlook:
    def test_stops_at_cycle_limit(self, ideal, caplog):
        noisy = ideal.with_overrides(readout_fidelity=0.9)
        with caplog.at_level("WARNING", logger="timebin_ghz.montecarlo._engine"):
            result = outlook(noisy, (2, 3, 4, 8), shots=MIN_SHOTS)
        assert sorted(result.results) == [2, 3, 4]
        assert [p[0] for p in result.fit.points] == [1, 2, 3]
        assert "at most n=7" in caplog.text


# =============================================================================
# Sweeps, Budgets and Output
# =============================================================================


class TestSweep:
    def test_readout_sweep_with_oracle(self, ideal):
        rows = sweep(ideal, "readout_fidelity", [1.0, 0.9], 2, shots=MIN_SHOTS)
        assert [r.value for r in rows] == [1.0, 0.9]
        assert rows[0].fidelity == pytest.approx(1.0)
        assert rows[1].oracle == pytest.approx(0.85)
        assert abs(rows[1].fidelity - 0.85) <= 3 * rows[1].std_err

    def test_no_oracle_for_unmapped_field(self, ideal):
        rows = sweep(ideal, "b_field", [4.0], 2, shots=MIN_SHOTS)
        assert rows[0].oracle is None

    @pytest.mark.parametrize("parameter", ["name", "nuclear_noise_enabled", "warp"])
    def test_non_scalar_field(self, ideal, parameter):
        with pytest.raises(ConfigError, match="Cannot sweep"):
            sweep(ideal, parameter, [1.0], 2)


class TestErrorBudget:
    def test_disabled_sources_cost_nothing(self, ideal):
        scenario = ideal.with_overrides(readout_fidelity=0.9)
        rows = error_budget(scenario, 2, shots=MIN_SHOTS, sources=("cyclicity", "readout"))
        by_source = {r.source: r for r in rows}
        assert by_source["cyclicity"].infidelity == pytest.approx(0.0, abs=1e-12)
        assert by_source["readout"].fidelity_without == pytest.approx(1.0)
        assert by_source["readout"].infidelity == pytest.approx(0.15, abs=0.05)


class TestRunResultOutput:
    @pytest.fixture(scope="class")
    def result(self):
        from timebin_ghz.channels import get_preset

        return estimate_fidelity(get_preset("ideal"), 2, shots=MIN_SHOTS, keep_records=True)

    def test_summary_json(self, result, tmp_path):
        path = result.write_json(tmp_path / "run" / "summary.json")
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["n"] == 2
        assert data["fidelity"]["value"] == 1.0
        assert data["scenario"]["cyclicity"] == "inf"
        assert len(data["mk"]) == 2
        assert [s["label"] for s in data["settings"]][:2] == ["Pz+", "Pz-"]

    def test_records_csv(self, result, tmp_path):
        path = result.write_records_csv(tmp_path / "shots.csv")
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["setting", "outcome", "weight"]
        assert len(rows) == 1 + result.shots_total
        z_outcomes = {r[1] for r in rows[1:] if r[0] == "Pz+" and r[1]}
        assert z_outcomes <= {"00", "11"}
        m_outcomes = {r[1] for r in rows[1:] if r[0].startswith("M") and r[1]}
        assert all(set(o) <= {"+", "-"} for o in m_outcomes)

    def test_acceptance_rate(self, result):
        assert 0 < result.acceptance_rate <= 1


# =============================================================================
# Benchmark
# =============================================================================


def test_trajectory_speed(benchmark, inas_current):
    setting = MeasurementSetting(3, 2, 0)
    sequence = build_experiment_cycle(3, setting=setting)
    rates = ChannelRates.from_scenario(inas_current)
    generator = np.random.default_rng(0)
    benchmark(run_trajectory, sequence, inas_current, setting, generator, rates=rates)


# =============================================================================
# Full-Scale Runs
# =============================================================================


@pytest.mark.slow
class TestPublishedScenarios:
    def test_current_device_three_qubits(self, inas_current):
        result = estimate_fidelity(inas_current, 3, shots=10_000, threads=4)
        assert result.fidelity.value == pytest.approx(0.571, abs=0.02)

    def test_current_device_budget(self, inas_current):
        rows = {r.source: r for r in error_budget(inas_current, 3, shots=10_000, threads=4)}
        expected = {
            "off_resonant": (0.114, 0.015),
            "nuclear": (0.060, 0.015),
            "spin_flip": (0.032, 0.015),
            "readout": (0.012, 0.005),
            "dephasing": (0.007, 0.005),
            "cyclicity": (0.006, 0.005),
        }
        for source, (value, tol) in expected.items():
            assert rows[source].infidelity == pytest.approx(value, abs=tol)

    @pytest.mark.parametrize("n,expected", [(3, 0.67), (4, 0.58)])
    def test_optimized_device(self, n, expected):
        from timebin_ghz.channels import get_preset

        result = estimate_fidelity(get_preset("inas-optimized"), n, shots=10_000, threads=4)
        assert result.fidelity.value == pytest.approx(expected, abs=0.02)

    def test_gaas_outlook(self):
        from timebin_ghz.channels import get_preset

        fit = outlook(get_preset("gaas"), (2, 3, 4), shots=10_000, threads=4).fit
        assert fit.per_photon_infidelity == pytest.approx(0.088, abs=0.01)
        assert fit.n_max == pytest.approx(8, abs=1)
