"""Sequence playback: compile pulse items to propagation chunks and run them.

A :class:`~darksim.pulses.Sequence` is lowered to a list of chunks:

* ``("unitary", U)`` — instantaneous 4x4 unitary (ideal hard pulses);
* ``("static", H, duration)`` — constant Hamiltonian (delays, CW locks,
  individual composite-pulse elements);
* ``("segment", seg, t_start)`` — a sampled envelope, sliced at playback
  time with its carrier phase evaluated in *global* sequence time so that
  back-to-back segments stay phase-continuous.

Two engines consume the chunks: ``ideal_propagator`` (closed-form unitary
composition) and ``evolve_sequence`` (Lindblad propagation, exact generator
exponentials for static chunks, Strang-split slices for segments).  For
trajectory-averaged monitored windows the harness instead asks for the raw
slice Hamiltonians via ``train_hamiltonians`` and feeds them to the
stochastic kernel driver directly.
"""

import numpy as np
from scipy.linalg import expm

from . import kernels
from .dynamics import (
    PropagationConfig,
    RelaxationModel,
    _guard_step,
    half_step_propagator,
    lindblad_superoperator,
)
from .numlin import mat_exp_hermitian
from .pulses import Delay, IdealPulse, PulseSegment, Sequence, SpinLock, waltz16_pulses
from .spinsys import OPS, SpinParams, internal_hamiltonian

_TWO_PI = 2.0 * np.pi


def compile_plan(seq: Sequence, p: SpinParams):
    """Lower a sequence to (chunk list, total duration)."""
    h_int = internal_hamiltonian(p)
    chunks = []
    t = 0.0
    for item in seq.items:
        if isinstance(item, IdealPulse):
            chunks.append(("unitary", item.unitary()))
        elif isinstance(item, Delay):
            if item.duration > 0:
                chunks.append(("static", h_int, item.duration))
            t += item.duration
        elif isinstance(item, SpinLock):
            chunks.extend(_lock_chunks(item, h_int))
            t += item.duration
        elif isinstance(item, PulseSegment):
            chunks.append(("segment", item, t))
            t += item.duration
        else:
            raise TypeError(f"unknown sequence item {type(item).__name__}")
    return chunks, t


def _lock_chunks(lock: SpinLock, h_int):
    if lock.mode == "ideal-equivalence":
        # an ideal lock averages the shift away, leaving only J I1.I2
        return [("static", _j_part(h_int), lock.duration)]
    if lock.mode == "cw":
        return [("static", h_int + lock.amplitude * OPS.ix12, lock.duration)]
    # waltz16: repeat the supercycle, truncating the final element if needed
    out = []
    remaining = lock.duration
    pulses = waltz16_pulses(lock.amplitude)
    while remaining > 1e-15:
        for dur, phase in pulses:
            d = min(dur, remaining)
            h = h_int + lock.amplitude * (
                np.cos(phase) * OPS.ix12 + np.sin(phase) * OPS.iy12
            )
            out.append(("static", h, d))
            remaining -= d
            if remaining <= 1e-15:
                break
    return out


def _j_part(h_int):
    """Extract J I1.I2 from H_int (the shift part is traceless odd)."""
    j = np.real(np.trace(h_int @ OPS.dot12) / np.trace(OPS.dot12 @ OPS.dot12))
    return j * OPS.dot12


def segment_hamiltonians(seg: PulseSegment, p: SpinParams, dt, t_start=0.0):
    """Slice Hamiltonians H_k (n, 4, 4) for one segment at step ``dt``.

    Slice k is evaluated at its midpoint; the envelope sample covering that
    midpoint supplies (amplitude, phase) and the carrier phase uses global
    time ``t_start + midpoint``.
    """
    n = max(int(round(seg.duration / dt)), 1)
    tau = (np.arange(n) + 0.5) * (seg.duration / n)
    idx = np.minimum((tau / seg.sample_dt).astype(int), seg.n_samples - 1)
    amp = seg.amplitudes[idx]
    ang = _TWO_PI * seg.carrier_offset * (t_start + tau) + seg.phases[idx]
    h = np.broadcast_to(internal_hamiltonian(p), (n, 4, 4)).copy()
    h += (amp * np.cos(ang))[:, None, None] * OPS.ix12
    h += (amp * np.sin(ang))[:, None, None] * OPS.iy12
    return h


def train_hamiltonians(items, p: SpinParams, dt, t_start=0.0):
    """Concatenated slice Hamiltonians for a monitored item train.

    Accepts the same items as a Sequence except ideal pulses (a monitored
    window is continuous irradiation and/or free evolution).  Static items
    are expanded into repeated slices so noise coefficients line up.
    """
    chunks, _ = compile_plan(Sequence(tuple(items)), p)
    arrays = []
    t = t_start
    for chunk in chunks:
        kind = chunk[0]
        if kind == "unitary":
            raise ValueError("ideal pulses are not allowed in a sliced train")
        if kind == "static":
            _, h, duration = chunk
            n = max(int(round(duration / dt)), 1)
            arrays.append(np.broadcast_to(h, (n, 4, 4)))
            t += duration
        else:
            _, seg, _ = chunk
            arrays.append(segment_hamiltonians(seg, p, dt, t))
            t += seg.duration
    return np.ascontiguousarray(np.concatenate(arrays, axis=0))


def ideal_propagator(seq: Sequence, p: SpinParams, dt=5e-5):
    """Relaxation-free total unitary of a sequence."""
    chunks, _ = compile_plan(seq, p)
    u_total = np.eye(4, dtype=complex)
    t = 0.0
    no_ops = np.zeros((0, 4, 4), dtype=complex)
    for chunk in chunks:
        kind = chunk[0]
        if kind == "unitary":
            u_total = chunk[1] @ u_total
        elif kind == "static":
            _, h, duration = chunk
            u_total = mat_exp_hermitian(h, _TWO_PI * duration) @ u_total
            t += duration
        else:
            _, seg, t_seg = chunk
            h = segment_hamiltonians(seg, p, dt, t_seg)
            n = h.shape[0]
            u = kernels.propagator_slices(h, no_ops, np.zeros((n, 0)), seg.duration / n)
            u_total = u @ u_total
            t += seg.duration
    return u_total


def evolve_sequence(
    rho,
    seq: Sequence,
    p: SpinParams,
    model: RelaxationModel,
    cfg: PropagationConfig = PropagationConfig(),
):
    """Play a sequence on a state under the relaxation model.

    Static chunks use the exact generator exponential (cached per distinct
    Hamiltonian/duration); segments use the sliced Strang split.  Returns
    the final 4x4 state.
    """
    chunks, _ = compile_plan(seq, p)
    state = np.array(rho, dtype=complex)
    cache = {}
    e_half = half_step_propagator(model, cfg.dt)
    no_ops = np.zeros((0, 4, 4), dtype=complex)
    for chunk in chunks:
        kind = chunk[0]
        if kind == "unitary":
            u = chunk[1]
            state = u @ state @ u.conj().T
        elif kind == "static":
            _, h, duration = chunk
            key = (h.tobytes(), duration)
            step = cache.get(key)
            if step is None:
                step = expm(lindblad_superoperator(h, model) * duration)
                cache[key] = step
            state = (step @ state.reshape(-1)).reshape(4, 4)
        else:
            _, seg, t_seg = chunk
            h = segment_hamiltonians(seg, p, cfg.dt, t_seg)
            _guard_step(cfg.dt, model, h)
            n = h.shape[0]
            kernels.evolve_slices(
                np.ascontiguousarray(state),
                h,
                no_ops,
                np.zeros((n, 0)),
                seg.duration / n,
                e_half,
                0,
                np.empty((0, 4, 4), dtype=complex),
            )
    return state


def interaction_frame(states, times, p: SpinParams):
    """Transform lab-frame states to the internal-Hamiltonian frame.

    rho_I(t) = U0(t)+ rho(t) U0(t) with U0 = exp(-2j pi H_int t); in this
    frame the singlet-triplet zero-quantum precession is removed, so a
    state that merely follows the free evolution reports as stationary.
    """
    h = internal_hamiltonian(p)
    w, v = np.linalg.eigh(h)
    states = np.asarray(states, dtype=complex)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    phases = np.exp(-2j * np.pi * np.outer(times, w))
    out = np.empty_like(states, shape=(times.size, 4, 4))
    single = states.ndim == 2
    for k in range(times.size):
        u0 = (v * phases[k]) @ v.conj().T
        s = states if single else states[k]
        out[k] = u0.conj().T @ s @ u0
    return out[0] if single else out
