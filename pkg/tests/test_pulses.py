"""Pulse elements: preparation search, WALTZ structure, envelope export."""

import numpy as np
import pytest

from darksim.errors import ContractUnsatisfied, UnderSampled
from darksim.pulses import (
    Delay,
    IdealPulse,
    PulseSegment,
    Sequence,
    SpinLock,
    find_prep_delays,
    gaussian_probe_segment,
    hard_pulse_segment,
    prep_objective,
    segment_from_text,
    segment_to_text,
    singlet_prep_sequence,
    two_tone_segment,
    waltz16_pulses,
)
from darksim.spinsys import SpinParams, probe_control_frequencies, singlet_triplet_states
from darksim.playback import ideal_propagator

P = SpinParams()


def test_prep_delays_meet_contract():
    tau1, tau2 = find_prep_delays(P)
    assert prep_objective(P, tau1, tau2) >= 1.998
    # near the analytic seeds 1/(4J) and 1/(2 delta_nu)
    assert tau1 == pytest.approx(1.0 / (4 * P.j_coupling), rel=0.05)
    assert tau2 == pytest.approx(1.0 / (2 * P.delta_nu), rel=0.05)


def test_prep_scales_with_parameters():
    # doubling both frequencies halves both delays (pure time rescaling)
    p2 = SpinParams(delta_nu=2 * P.delta_nu, j_coupling=2 * P.j_coupling)
    tau1, tau2 = find_prep_delays(P)
    s1, s2 = find_prep_delays(p2)
    assert s1 == pytest.approx(tau1 / 2, rel=1e-3)
    assert s2 == pytest.approx(tau2 / 2, rel=1e-3)


def test_prep_works_across_shift_to_coupling_ratios():
    for ratio in (10.0, 100.0, 1000.0):
        p = SpinParams(delta_nu=ratio * 4.1, j_coupling=4.1)
        tau1, tau2 = find_prep_delays(p)
        assert prep_objective(p, tau1, tau2) >= 1.998


def test_prep_requires_coupling():
    with pytest.raises(ContractUnsatisfied):
        find_prep_delays(SpinParams(delta_nu=270.3, j_coupling=0.0))


def test_prep_sequence_propagator_contract():
    u = ideal_propagator(singlet_prep_sequence(P), P)
    s0, _, t0, _ = singlet_triplet_states()
    assert abs(s0.conj() @ u[:, 0]) ** 2 >= 0.999
    assert abs(t0.conj() @ u[:, 3]) ** 2 >= 0.999


def test_ideal_pulse_unitary():
    u = IdealPulse(np.pi, 0.0).unitary()
    # a collective pi rotation about x maps |00> to -|11>
    out = u @ np.array([1.0, 0, 0, 0], dtype=complex)
    assert abs(out[3]) == pytest.approx(1.0, abs=1e-12)


def test_waltz16_structure():
    pulses = waltz16_pulses(2000.0)
    assert len(pulses) == 36
    total = sum(d for d, _ in pulses)
    # 4 elements x 24 ninety-degree units at 125 us each = 12 ms
    assert total == pytest.approx(0.012, abs=1e-12)
    assert set(ph for _, ph in pulses) == {0.0, np.pi}


def test_two_tone_sampling_guard():
    with pytest.raises(UnderSampled):
        two_tone_segment(1.0, 1.0, 500.0, -500.0, sample_rate=2000.0)


def test_two_tone_phase_continuity():
    fp, fc = probe_control_frequencies(P)
    a = two_tone_segment(3.2, 3.2, fp, fc, duration=0.24, start_time=0.0)
    b = two_tone_segment(3.2, 3.2, fp, fc, duration=0.24, start_time=0.24)
    # segment b's first sample continues segment a's envelope
    t = 0.24 + 0.5 * b.sample_dt
    expected = 3.2 * np.exp(2j * np.pi * fp * t) + 3.2 * np.exp(2j * np.pi * fc * t)
    assert b.amplitudes[0] == pytest.approx(abs(expected), rel=1e-12)


def test_gaussian_probe_area():
    seg = gaussian_probe_segment(P, flip_area=np.pi / 2)
    area = seg.amplitudes.sum() * seg.sample_dt
    assert area == pytest.approx((np.pi / 2) / (2 * np.pi), rel=1e-12)
    fp, _ = probe_control_frequencies(P)
    assert seg.carrier_offset == pytest.approx(fp, abs=1e-12)


def test_segment_text_round_trip():
    fp, fc = probe_control_frequencies(P)
    seg = two_tone_segment(3.2, 1.7, fp, fc, duration=0.012)
    back = segment_from_text(segment_to_text(seg))
    assert back.duration == seg.duration
    assert back.carrier_offset == seg.carrier_offset
    assert np.array_equal(back.amplitudes, seg.amplitudes)
    assert np.array_equal(back.phases, seg.phases)


def test_segment_from_text_rejects_garbage():
    with pytest.raises(ValueError):
        segment_from_text("not a pulse table\n1 2 3 4\n")


def test_sequence_duration():
    seq = Sequence((IdealPulse(np.pi / 2), Delay(0.1), SpinLock(0.5, 2000.0)))
    assert seq.total_duration == pytest.approx(0.6)


def test_segment_validation():
    with pytest.raises(ValueError):
        PulseSegment(duration=-1.0, amplitudes=np.ones(4), phases=np.zeros(4))
    with pytest.raises(ValueError):
        PulseSegment(duration=1.0, amplitudes=-np.ones(4), phases=np.zeros(4))


def test_hard_pulse_duration():
    seg = hard_pulse_segment(np.pi / 2, 0.0)
    assert seg.duration == pytest.approx((np.pi / 2) / (2 * np.pi * 25000.0))
