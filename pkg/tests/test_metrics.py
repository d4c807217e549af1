"""Correlation metric, populations, FID/spectrum machinery."""

import numpy as np
import pytest

from darksim.dynamics import RelaxationModel
from darksim.errors import ZeroDeviation
from darksim.metrics import (
    add_measurement_noise,
    correlation,
    deviation_populations,
    simulate_fid,
    spectrum_from_fid,
    spectrum_peaks,
    spectrum_to_text,
)
from darksim.spinsys import (
    SpinParams,
    eigenstates_by_basis_label,
    equilibrium_deviation,
    singlet_deviation,
    singlet_projector,
    singlet_triplet_states,
)

P = SpinParams()
NONE = RelaxationModel()


def test_correlation_self_is_one():
    assert correlation(singlet_projector(), singlet_deviation()) == pytest.approx(1.0)
    assert correlation(singlet_deviation(), singlet_deviation()) == pytest.approx(1.0)


def test_correlation_singlet_vs_central_triplet():
    t0 = singlet_triplet_states()[2]
    rho_t0 = np.outer(t0, t0.conj())
    assert correlation(rho_t0, singlet_deviation()) == pytest.approx(-1.0 / 3.0)


def test_correlation_bounds_and_symmetry():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        a = a @ a.conj().T
        c = correlation(a, singlet_deviation())
        assert -1.0 - 1e-12 <= c <= 1.0 + 1e-12
        assert c == pytest.approx(correlation(singlet_deviation(), a))


def test_correlation_rejects_zero_deviation():
    with pytest.raises(ZeroDeviation):
        correlation(np.eye(4) / 4.0, singlet_deviation())


def test_deviation_populations_sum_to_zero():
    pops = deviation_populations(singlet_projector())
    assert sum(pops) == pytest.approx(0.0, abs=1e-14)
    assert pops == pytest.approx((-0.25, 0.25, 0.25, -0.25))


def test_measurement_noise_preserves_trace_and_hermiticity():
    rng = np.random.default_rng(0)
    out = add_measurement_noise(singlet_projector(), 0.01, rng)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(out - out.conj().T)) < 1e-14


def test_fid_parseval():
    fid = simulate_fid(equilibrium_deviation(), P, NONE, 1e-3, 4096, broadening=0.0)
    spec = spectrum_from_fid(fid, 1e-3)
    df = spec.frequency[1] - spec.frequency[0]
    lhs = np.sum(np.abs(fid) ** 2) * 1e-3
    rhs = np.sum(np.abs(spec.amplitude) ** 2) * df
    assert rhs == pytest.approx(lhs, rel=1e-12)


def test_spectrum_lines_at_transition_frequencies():
    rho = equilibrium_deviation()
    # hard 90y excitation: rotate Iz into the transverse plane
    from darksim.pulses import IdealPulse

    u = IdealPulse(np.pi / 2, np.pi / 2).unitary()
    fid = simulate_fid(u @ rho @ u.conj().T, P, NONE, 1e-3, 16384, broadening=0.5)
    spec = spectrum_from_fid(fid, 1e-3, zero_fill=13)
    peaks = spectrum_peaks(spec)
    assert len(peaks) == 4
    w, _ = eigenstates_by_basis_label(P)
    expected = sorted(
        [w[1] - w[0], w[3] - w[1], w[2] - w[0], w[3] - w[2]]
    )
    for (f, _), e in zip(peaks, expected):
        assert f == pytest.approx(e, abs=0.01)


def test_fid_guards():
    with pytest.raises(ValueError):
        simulate_fid(singlet_projector(), P, NONE, 1e-3, 1)
    with pytest.raises(ValueError):
        simulate_fid(singlet_projector(), P, NONE, 1.0, 100)  # dt*n > 30 s


def test_spectrum_text_format():
    fid = simulate_fid(equilibrium_deviation(), P, NONE, 1e-3, 64)
    spec = spectrum_from_fid(fid, 1e-3)
    text = spectrum_to_text(spec)
    lines = text.splitlines()
    assert lines[0].startswith("# darksim-spectrum v1")
    assert len(lines[2].split()) == 2
    text3 = spectrum_to_text(spec, include_imag=True)
    assert len(text3.splitlines()[2].split()) == 3
