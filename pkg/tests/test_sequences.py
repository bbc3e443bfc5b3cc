import numpy as np
import pytest

from ionstring import sequences as sq
from ionstring.errors import FitError

TAU = 0.02


def table_i_components():
    return [
        sq.NoiseComponent.from_field(50.0, 37.2, 0.4),
        sq.NoiseComponent.from_field(150.0, 9.3, 1.9),
        sq.NoiseComponent.from_field(250.0, 23.3, -1.1),
    ]


def test_cpmg_pulse_fractions():
    assert sq.cpmg(2, TAU).delta == (0.25, 0.75)
    assert sq.cpmg(10, TAU).delta[0] == pytest.approx(0.05)
    assert sq.cpmg(1, TAU).delta == (0.5,)


def test_pulse_sequence_validation():
    with pytest.raises(ValueError):
        sq.PulseSequence(delta=(0.5, 0.4), tau=TAU)
    with pytest.raises(ValueError):
        sq.PulseSequence(delta=(0.0,), tau=TAU)
    with pytest.raises(ValueError):
        sq.cpmg(2, 0.0)


def test_filter_golden_value():
    seq = sq.cpmg(2, TAU)
    expected = 2.0 * TAU / (np.pi * np.sqrt(2.0 * np.pi))
    assert abs(abs(sq.filter_function(seq, 1.0 / TAU)) - expected) < 1e-10


def test_filter_zero_frequency_limit_is_continuous():
    seq = sq.cpmg(4, TAU)
    inside = sq.filter_function(seq, 1e-7 / (2 * np.pi * TAU))
    outside = sq.filter_function(seq, 1e-5 / (2 * np.pi * TAU))
    assert abs(inside) < 1e-8
    assert abs(outside) < 1e-8
    assert abs(sq.filter_function(seq, 0.0)) < 1e-15


@pytest.mark.parametrize("n_pulses", [2, 6, 10])
def test_even_pulse_suppression_comb(n_pulses):
    seq = sq.cpmg(n_pulses, TAU)
    for k in range(1, 4 * n_pulses):
        f = k / TAU
        magnitude = abs(sq.filter_function(seq, f))
        if (2 * k) % n_pulses == 0 and (2 * k // n_pulses) % 2 == 1:
            assert magnitude > 1e-4 * TAU  # an odd multiple of the peak
        else:
            assert magnitude < 1e-12 * TAU


@pytest.mark.parametrize("n_pulses", [3, 5])
def test_odd_pulse_suppression_comb(n_pulses):
    seq = sq.cpmg(n_pulses, TAU)
    for k in range(0, 4 * n_pulses):
        f = k / TAU + 0.5 / TAU
        magnitude = abs(sq.filter_function(seq, f))
        odd = 2 * k + 1
        if odd % n_pulses == 0 and (odd // n_pulses) % 2 == 1:
            assert magnitude > 1e-4 * TAU
        else:
            assert magnitude < 1e-12 * TAU


@pytest.mark.parametrize("n_pulses", [2, 6, 10])
def test_filter_peak_on_line_harmonic_comb(n_pulses):
    """Among the line harmonics k/tau, the peak is at n_pulses/(2 tau)."""
    seq = sq.cpmg(n_pulses, TAU)
    comb = np.arange(1, 6 * n_pulses) / TAU
    magnitudes = np.abs(sq.filter_function(seq, comb))
    nominal = n_pulses / (2.0 * TAU)
    assert abs(comb[np.argmax(magnitudes)] - nominal) <= 0.02 * nominal


@pytest.mark.parametrize("n_pulses", [6, 10])
def test_filter_lobe_maximum_near_nominal(n_pulses):
    seq = sq.cpmg(n_pulses, TAU)
    nominal = n_pulses / (2.0 * TAU)
    grid = np.linspace(0.8 * nominal, 1.2 * nominal, 8001)
    peak = grid[np.argmax(np.abs(sq.filter_function(seq, grid)))]
    assert abs(peak - nominal) <= 0.02 * nominal


def test_response_trivials():
    seq = sq.cpmg(2, TAU)
    assert sq.cpmg_response(sq.NoiseComponent(50.0, 0.0), 1.0, 0.123, seq) == 0.5
    assert sq.cpmg_response(sq.NoiseComponent(50.0, 500.0), 0.0, 0.123, seq) == 0.5


def test_response_reaches_unity_at_quarter_wave():
    seq = sq.cpmg(2, TAU)
    gain = np.sqrt(2 * np.pi) * abs(sq.filter_function(seq, 50.0))
    amplitude = (np.pi / 2.0) / gain
    comp = sq.NoiseComponent(50.0, amplitude, 0.0)
    arg_f = np.angle(sq.filter_function(seq, 50.0))
    t_peak = (np.pi / 2.0 - arg_f) / (2.0 * np.pi * 50.0)
    np.testing.assert_allclose(
        sq.cpmg_response(comp, 1.0, t_peak, seq), 1.0, atol=1e-12
    )


def test_response_periodicity():
    seq = sq.cpmg(2, TAU)
    comp = sq.NoiseComponent(50.0, 321.0, 0.77)
    for t0 in (0.0, 0.0123, 0.5):
        a = sq.cpmg_response(comp, 0.8, t0, seq)
        b = sq.cpmg_response(comp, 0.8, t0 + 1.0 / 50.0, seq)
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_sense_is_identity_on_noiseless_data():
    seq = sq.cpmg(2, TAU)
    comp = sq.NoiseComponent(50.0, 2 * np.pi * 104.0, 0.8)
    t0 = np.arange(41) / 41 / 50.0
    data = sq.simulate_scan(seq, [comp], 0.9, t0)
    fit = sq.sense(t0, data, seq, 50.0)
    assert abs(fit.amplitude - comp.amplitude) / comp.amplitude < 1e-6
    assert abs(fit.phase - comp.phase) < 1e-6
    assert abs(fit.contrast - 0.9) < 1e-6
    assert fit.amplitude_sigma >= 0.0


def test_sense_recovers_wrapped_amplitude_with_shot_noise():
    seq = sq.cpmg(2, TAU)
    comp = sq.NoiseComponent(50.0, 2 * np.pi * 104.0, 0.4)  # wraps: inner ~ 8.3 rad
    t0 = np.arange(41) / 41 / 50.0
    rng = np.random.default_rng(11)
    data = sq.simulate_scan(seq, [comp], 1.0, t0, shots=100, rng=rng)
    fit = sq.sense(t0, data, seq, 50.0)
    assert abs(fit.amplitude - comp.amplitude) / comp.amplitude < 0.05


def test_sense_recovers_low_contrast():
    seq = sq.cpmg(2, TAU)
    comp = sq.NoiseComponent(50.0, 2 * np.pi * 104.0, 0.4)
    t0 = np.arange(41) / 41 / 50.0
    rng = np.random.default_rng(1)
    data = sq.simulate_scan(seq, [comp], 0.25, t0, shots=100, rng=rng)
    fit = sq.sense(t0, data, seq, 50.0)
    assert abs(fit.contrast - 0.25) < 0.05


def test_sense_rejects_flat_scan():
    seq = sq.cpmg(2, TAU)
    t0 = np.arange(16) / 16 / 50.0
    with pytest.raises(FitError, match="no modulation"):
        sq.sense(t0, np.full(16, 0.5), seq, 50.0)


def test_field_conversion_table_values():
    assert sq.amplitude_to_field(0.0) == 0.0
    np.testing.assert_allclose(
        sq.amplitude_to_field(2 * np.pi * 104.0), 37.2, rtol=0.004
    )
    np.testing.assert_allclose(
        sq.amplitude_to_field(2 * np.pi * 65.0), 23.3, rtol=0.004
    )
    roundtrip = sq.amplitude_to_field(sq.field_to_amplitude(9.3))
    np.testing.assert_allclose(roundtrip, 9.3, rtol=1e-12)


def test_compensate_exact_component_in_one_round():
    comps = [sq.NoiseComponent(50.0, 2 * np.pi * 104.0, 0.7)]
    result = sq.compensate(comps, seed=0, max_rounds=1, shots=None)
    assert result.residuals[0].amplitude < 1e-9 * comps[0].amplitude


def test_compensate_processes_high_frequencies_first():
    result = sq.compensate(table_i_components(), seed=1, max_rounds=2, shots=100)
    events = [(e.round_index, e.frequency_hz) for e in result.sense_log]
    for round_index in (0, 1):
        in_round = [f for r, f in events if r == round_index]
        assert in_round == [250.0, 150.0, 50.0]


def test_compensate_table_i_reduction():
    comps = table_i_components()
    result = sq.compensate(comps, seed=5, max_rounds=2, shots=100)
    for frequency, factor in result.reduction_factors(comps).items():
        assert factor <= 0.1, f"{frequency} Hz reduced only {1 / factor:.1f}-fold"


def test_compensate_drift_leaves_residual_floor():
    comps = [sq.NoiseComponent(50.0, 2 * np.pi * 104.0, 0.7)]
    result = sq.compensate(comps, seed=3, max_rounds=2, shots=None, phase_drift=0.05)
    assert result.residuals[0].amplitude > 1e-3 * comps[0].amplitude


def test_waveform_samples_cancels_component():
    comps = [sq.NoiseComponent(50.0, 2 * np.pi * 104.0, 0.7)]
    result = sq.compensate(comps, seed=0, max_rounds=1, shots=None)
    t = np.linspace(0.0, 0.04, 101)
    total = sq.waveform_samples(comps, t) + sq.waveform_samples(result.waveform, t)
    assert np.max(np.abs(total)) < 1e-6 * comps[0].amplitude


def ramsey_scenario(shots=400):
    residual = (
        sq.NoiseComponent.from_field(50.0, 1.3, 0.1),
        sq.NoiseComponent.from_field(150.0, 0.9, -0.5),
        sq.NoiseComponent.from_field(250.0, 0.7, 2.0),
    )
    return sq.RamseyScenario(
        uncompensated=tuple(table_i_components()),
        residual=residual,
        shots=shots,
    )


def test_ramsey_contrast_unity_without_noise():
    scenario = sq.RamseyScenario(uncompensated=(), residual=(), shots=4000)
    c = sq.ramsey_contrast(4.5e-3, scenario, sq.TRIGGER_AND_COMPENSATION, seed=1)
    assert abs(c - 1.0) < 0.02


def test_ramsey_contrast_scenario_ordering():
    scenario = ramsey_scenario()
    off = sq.ramsey_contrast(4.5e-3, scenario, sq.BOTH_OFF, seed=2)
    comp_only = sq.ramsey_contrast(4.5e-3, scenario, sq.COMPENSATION_ONLY, seed=2)
    assert off < comp_only - 0.3


def test_ramsey_trigger_and_compensation_indistinguishable():
    scenario = ramsey_scenario()
    comp_only = np.mean(
        [sq.ramsey_contrast(4.5e-3, scenario, sq.COMPENSATION_ONLY, seed=s) for s in range(4)]
    )
    both = np.mean(
        [sq.ramsey_contrast(4.5e-3, scenario, sq.TRIGGER_AND_COMPENSATION, seed=s) for s in range(4)]
    )
    assert abs(comp_only - both) < 0.05
