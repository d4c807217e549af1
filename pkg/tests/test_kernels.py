"""Compiled kernel vs pure-NumPy fallback cross-checks."""

import numpy as np
import pytest

from darksim import kernels
from darksim.dynamics import RelaxationModel, half_step_propagator
from darksim.kernels import _pykernels
from darksim.playback import segment_hamiltonians
from darksim.pulses import two_tone_segment
from darksim.spinsys import OPS, SpinParams, probe_control_frequencies, singlet_projector

_ckernels = pytest.importorskip("darksim.kernels._ckernels")

P = SpinParams()
DT = 5e-5


def _workload(n_rec=4):
    fp, fc = probe_control_frequencies(P)
    seg = two_tone_segment(3.2, 3.2, fp, fc, duration=0.048)
    h = segment_hamiltonians(seg, P, DT)
    n = h.shape[0]
    rng = np.random.default_rng(11)
    coeffs = rng.normal(scale=1.5, size=(n, 2))
    ops = np.ascontiguousarray(np.stack([OPS.iz1, OPS.iz2]).astype(complex))
    model = RelaxationModel(0.02, 0.06, 0.06, 0.06)
    e_half = half_step_propagator(model, DT)
    stride = n // n_rec
    return h, ops, coeffs, e_half, stride, n_rec


def _run(backend, h, ops, coeffs, e_half, stride, n_rec):
    rho = np.array(singlet_projector(), order="C")
    records = np.empty((n_rec, 4, 4), dtype=complex)
    backend.evolve_slices(rho, h, ops, coeffs, DT, e_half, stride, records)
    return rho, records


def test_backends_agree_on_evolution():
    args = _workload()
    rho_c, rec_c = _run(_ckernels, *args)
    rho_p, rec_p = _run(_pykernels, *args)
    assert np.max(np.abs(rho_c - rho_p)) < 1e-12
    assert np.max(np.abs(rec_c - rec_p)) < 1e-12


def test_backends_agree_on_propagator():
    h, ops, coeffs, *_ = _workload()
    u_c = _ckernels.propagator_slices(h, ops, coeffs, DT)
    u_p = _pykernels.propagator_slices(h, ops, coeffs, DT)
    assert np.max(np.abs(u_c - u_p)) < 1e-12
    assert np.max(np.abs(u_c.conj().T @ u_c - np.eye(4))) < 1e-10


def test_trivial_model_keeps_unitarity():
    h, ops, coeffs, _, stride, n_rec = _workload()
    rho, _ = _run(kernels, h, ops, coeffs, None, stride, n_rec)
    # pure state stays pure under e_half = None (no dissipator)
    assert np.trace(rho @ rho).real == pytest.approx(1.0, abs=1e-10)


def test_backend_selection_reports():
    assert kernels.BACKEND in ("cython", "python")
