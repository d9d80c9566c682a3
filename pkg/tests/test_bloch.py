"""Tests for the photon-resolved Bloch solver and the off-resonant closed form."""

import math

import pytest

from timebin_ghz import DomainError, InvalidArgumentError
from timebin_ghz.bloch import (
    TwoLevelParams,
    closed_form_offres_fidelity,
    excitation_probability,
    ghz_to_angular,
    offres_excitation_probability,
    optimal_square_duration,
    solve_bloch,
)
from timebin_ghz.channels import get_preset

GAMMA = 1 / 0.235


# =============================================================================
# Parameters
# =============================================================================


class TestTwoLevelParams:
    @pytest.mark.parametrize(
        "kwargs,match",
        [
            ({"gamma": -1.0, "delta_l": 0.0}, "gamma"),
            ({"gamma": 1.0, "delta_l": 0.0, "duration": 0.0}, "duration"),
            ({"gamma": 1.0, "delta_l": 0.0, "pulse_area": -1.0}, "pulse_area"),
            ({"gamma": 1.0, "delta_l": 0.0, "pulse_shape": "sech"}, "pulse_shape"),
        ],
    )
    def test_invalid(self, kwargs, match):
        with pytest.raises(InvalidArgumentError, match=match):
            TwoLevelParams(**kwargs)

    def test_gaussian_window_is_symmetric(self):
        t0, t1 = TwoLevelParams(GAMMA, 0.0).pulse_window()
        assert t0 == pytest.approx(-t1)

    def test_ghz_to_angular(self):
        assert ghz_to_angular(1.0) == pytest.approx(2 * math.pi)


# =============================================================================
# Solver
# =============================================================================


class TestSolveBloch:
    def test_lossless_square_pi_pulse(self):
        out = solve_bloch(
            TwoLevelParams(gamma=0.0, delta_l=0.0, pulse_shape="square",
                           pulse_area=math.pi, duration=0.03)
        )
        assert out.p_one == pytest.approx(1.0, abs=1e-6)
        assert out.p_zero == pytest.approx(0.0, abs=1e-6)

    def test_zero_area_leaves_ground_state(self):
        out = solve_bloch(TwoLevelParams(GAMMA, 0.0, pulse_area=0.0))
        assert out.p_zero == pytest.approx(1.0)

    def test_resonant_partial_pulse_excitation(self):
        params = TwoLevelParams(GAMMA, 0.0, pulse_area=0.7 * math.pi, duration=0.030)
        inversion = excitation_probability(params)
        assert inversion == pytest.approx(0.80, abs=0.01)
        assert inversion == pytest.approx(math.sin(0.35 * math.pi) ** 2, abs=1e-6)

    def test_decay_during_pulse_lowers_emission(self):
        params = TwoLevelParams(GAMMA, 0.0, pulse_area=0.7 * math.pi, duration=0.030)
        emitted = solve_bloch(params).emission_probability
        assert emitted == pytest.approx(0.773, abs=0.01)
        assert emitted < excitation_probability(params)

    def test_excitation_probability_ignores_decay_rate(self):
        slow = TwoLevelParams(1.0, 0.0, pulse_area=0.5 * math.pi)
        fast = TwoLevelParams(10.0, 0.0, pulse_area=0.5 * math.pi)
        assert excitation_probability(slow) == pytest.approx(excitation_probability(fast))
        assert excitation_probability(slow) == pytest.approx(0.5, abs=1e-6)

    def test_probability_conserved(self):
        out = solve_bloch(TwoLevelParams(GAMMA, ghz_to_angular(-2.0), pulse_area=0.7 * math.pi))
        assert out.total == pytest.approx(1.0, abs=1e-8)

    def test_decay_window_empties_excited_state(self):
        out = solve_bloch(TwoLevelParams(GAMMA, 0.0))
        assert out.residual_excited < 1e-4

    def test_two_photon_emission_is_small_for_short_pulses(self):
        out = solve_bloch(TwoLevelParams(GAMMA, 0.0, duration=0.030))
        assert 0 < out.p_two < 0.05

    def test_detuning_lowers_excitation(self):
        resonant = solve_bloch(TwoLevelParams(GAMMA, 0.0))
        detuned = solve_bloch(TwoLevelParams(GAMMA, ghz_to_angular(30.0)))
        assert detuned.emission_probability < resonant.emission_probability

    def test_as_array(self):
        out = solve_bloch(TwoLevelParams(GAMMA, 0.0))
        assert out.as_array().tolist() == [out.p_zero, out.p_one, out.p_two]


class TestScenarioExcitation:
    def test_current_device(self):
        outcome = offres_excitation_probability(get_preset("inas-current"))
        assert 0 < outcome.p_wrong < 0.5
        assert outcome.p_reexcite == outcome.target.p_two
        assert outcome.target.emission_probability > outcome.wrong.emission_probability

    def test_larger_splitting_reduces_wrong_excitation(self):
        current = offres_excitation_probability(get_preset("inas-current"))
        optimized = offres_excitation_probability(get_preset("inas-optimized"))
        assert optimized.p_wrong < current.p_wrong


# =============================================================================
# Closed-Form Off-Resonant Fidelity
# =============================================================================


class TestClosedFormOffresFidelity:
    def test_no_photons(self):
        assert closed_form_offres_fidelity(0, 20.0) == pytest.approx(1.0)

    def test_decreases_with_photon_number(self):
        values = [closed_form_offres_fidelity(n, 17.7) for n in range(1, 6)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert all(0.5 < v < 1.0 for v in values)

    @pytest.mark.parametrize("splitting_ghz", [10.0, 30.0, 100.0])
    def test_improves_with_detuning(self, splitting_ghz):
        near = closed_form_offres_fidelity(2, ghz_to_angular(splitting_ghz) / GAMMA)
        far = closed_form_offres_fidelity(2, ghz_to_angular(2 * splitting_ghz) / GAMMA)
        assert far > near

    def test_two_photons_at_ten_ghz(self):
        delta_tilde = 2 * ghz_to_angular(10.0) / GAMMA
        assert closed_form_offres_fidelity(2, delta_tilde) == pytest.approx(0.9533, abs=2e-3)

    def test_matches_scenario_convention(self):
        scenario = get_preset("ideal").with_overrides(cycling_splitting_ghz=10.0)
        assert scenario.delta_tilde == pytest.approx(2 * ghz_to_angular(10.0) / GAMMA)

    def test_domain(self):
        with pytest.raises(DomainError, match="delta_tilde"):
            closed_form_offres_fidelity(1, 2.0)

    def test_domain_error_is_value_error(self):
        with pytest.raises(ValueError):
            closed_form_offres_fidelity(1, 0.0)

    def test_optimal_square_duration(self):
        delta_l = ghz_to_angular(12.0)
        assert optimal_square_duration(delta_l) == pytest.approx(math.sqrt(3) * math.pi / delta_l)

    def test_optimal_duration_is_transparent_to_detuned_line(self):
        delta_l = ghz_to_angular(12.0)
        params = TwoLevelParams(
            gamma=0.0, delta_l=delta_l, pulse_shape="square",
            pulse_area=math.pi, duration=optimal_square_duration(delta_l),
        )
        assert solve_bloch(params).p_one == pytest.approx(0.0, abs=1e-6)

    def test_optimal_duration_needs_positive_detuning(self):
        with pytest.raises(InvalidArgumentError):
            optimal_square_duration(0.0)
