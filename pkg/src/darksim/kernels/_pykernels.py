"""Pure-NumPy fallback for the compiled slice-propagation kernels.

Semantically identical to ``_ckernels`` (same splitting, same record
convention); roughly two orders of magnitude slower in the sequential
update loop, so only meant as an import-time fallback and for
cross-checking the compiled path.
"""

import numpy as np

_TWO_PI = 2.0 * np.pi


def _slice_hamiltonians(h_slices, ops, coeffs):
    h = np.array(h_slices, dtype=complex)
    if ops.shape[0]:
        h += np.einsum("km,mij->kij", coeffs, ops)
    return h


def _slice_unitaries(h, dt):
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * _TWO_PI * dt * w)
    return np.einsum("kil,kl,kjl->kij", v, phases, v.conj())


def evolve_slices(rho, h_slices, ops, coeffs, dt, e_half, stride, records):
    """See ``_ckernels.evolve_slices``; updates ``rho`` in place."""
    h = _slice_hamiltonians(h_slices, ops, coeffs)
    us = _slice_unitaries(h, dt)
    n = h.shape[0]
    r = 0
    n_rec = records.shape[0] if stride > 0 else 0
    state = rho.copy()
    for k in range(n):
        if e_half is not None:
            state = (e_half @ state.reshape(-1)).reshape(4, 4)
        u = us[k]
        state = u @ state @ u.conj().T
        if e_half is not None:
            state = (e_half @ state.reshape(-1)).reshape(4, 4)
        if k % 256 == 255:
            state = 0.5 * (state + state.conj().T)
        if stride > 0 and (k + 1) % stride == 0 and r < n_rec:
            records[r] = state
            r += 1
    rho[:] = state
    return rho


def propagator_slices(h_slices, ops, coeffs, dt):
    """Total unitary of the slice train: U = U_n ... U_2 U_1."""
    h = _slice_hamiltonians(h_slices, ops, coeffs)
    us = _slice_unitaries(h, dt)
    u_total = np.eye(4, dtype=complex)
    for u in us:
        u_total = u @ u_total
    return u_total
