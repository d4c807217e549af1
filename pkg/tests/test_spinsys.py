"""Two-spin model: operators, eigenstructure, transition frequencies."""

import numpy as np
import pytest

from darksim.numlin import is_hermitian
from darksim.spinsys import (
    OPS,
    SpinParams,
    RFField,
    check_density_matrix,
    check_deviation_matrix,
    eigenstates_by_basis_label,
    equilibrium_deviation,
    internal_hamiltonian,
    probe_control_frequencies,
    rf_hamiltonian,
    singlet_deviation,
    singlet_projector,
    singlet_triplet_states,
    transition_frequency,
)

P = SpinParams()


def test_operator_algebra():
    # [Ix, Iy] = i Iz for each spin; I1.I2 commutes with every collective op
    for x, y, z in ((OPS.ix1, OPS.iy1, OPS.iz1), (OPS.ix2, OPS.iy2, OPS.iz2)):
        assert np.allclose(x @ y - y @ x, 1j * z, atol=1e-14)
    for op in (OPS.ix12, OPS.iy12, OPS.iz12):
        assert np.allclose(OPS.dot12 @ op - op @ OPS.dot12, 0.0, atol=1e-14)


def test_hamiltonian_is_hermitian_and_traceless():
    h = internal_hamiltonian(P)
    assert is_hermitian(h)
    assert abs(np.trace(h)) < 1e-14


def test_zero_shift_reduces_to_scalar_coupling():
    h = internal_hamiltonian(SpinParams(delta_nu=0.0, j_coupling=4.1))
    assert np.allclose(h, 4.1 * OPS.dot12, atol=1e-15)


def test_singlet_is_eigenstate_of_coupling():
    s0 = singlet_triplet_states()[0]
    # I1.I2 S0 = -3/4 S0 (the singlet); triplets sit at +1/4
    assert np.allclose(OPS.dot12 @ s0, -0.75 * s0, atol=1e-14)
    for t in singlet_triplet_states()[1:]:
        assert np.allclose(OPS.dot12 @ t, 0.25 * t, atol=1e-14)


def test_singlet_states_orthonormal():
    states = np.stack(singlet_triplet_states())
    assert np.allclose(states.conj() @ states.T, np.eye(4), atol=1e-14)


def test_transition_frequencies():
    fp, fc = probe_control_frequencies(P)
    # strong-coupling shift: lines sit at +-delta_nu'/2 +- J/2 with
    # delta_nu' = sqrt(delta_nu^2 + J^2)
    dnu_eff = np.hypot(P.delta_nu, P.j_coupling)
    assert fp == pytest.approx(0.5 * (dnu_eff - P.j_coupling), abs=1e-9)
    assert fc == pytest.approx(-0.5 * (dnu_eff - P.j_coupling) - P.j_coupling, abs=1e-9)
    # the |00>/|11> levels are degenerate, so each tone is simultaneously
    # resonant with the mirror transition into |11> (opposite sense)
    assert transition_frequency(P, 1, 3) == pytest.approx(-fp, abs=1e-9)
    assert transition_frequency(P, 2, 3) == pytest.approx(-fc, abs=1e-9)


def test_eigenstate_labeling_unique():
    w, v = eigenstates_by_basis_label(P)
    assert np.allclose(v.conj().T @ v, np.eye(4), atol=1e-12)
    # |00> and |11> are exact eigenstates at E = J/4
    assert w[0] == pytest.approx(P.j_coupling / 4.0, abs=1e-12)
    assert w[3] == pytest.approx(P.j_coupling / 4.0, abs=1e-12)


def test_rf_hamiltonian_at_zero_offset():
    f = RFField(amplitude=2.5)
    assert np.allclose(rf_hamiltonian(f, P, 0.37), 2.5 * OPS.ix12, atol=1e-14)
    f = RFField(amplitude=1.0, carrier_offset=10.0)
    # quarter period of a 10 Hz offset rotates x into y
    assert np.allclose(rf_hamiltonian(f, P, 0.025), OPS.iy12, atol=1e-12)


def test_checks_accept_and_reject():
    check_density_matrix(singlet_projector())
    check_deviation_matrix(singlet_deviation())
    check_deviation_matrix(equilibrium_deviation())
    with pytest.raises(ValueError):
        check_density_matrix(2.0 * singlet_projector())
    with pytest.raises(ValueError):
        check_deviation_matrix(singlet_projector())


def test_negative_shift_rejected():
    with pytest.raises(ValueError):
        SpinParams(delta_nu=-1.0)
