"""Benchmark the compiled slice-propagation kernel against the pure-NumPy
fallback on a representative workload: one 240 ms two-tone segment sliced
at 50 us (4800 slices) with relaxation and per-slice noise coefficients.

Run as ``python3 benchmarks/bench_kernels.py``.
"""

import time

import numpy as np

from darksim.dynamics import half_step_propagator
from darksim.dynamics import calibrated_model
from darksim.kernels import _pykernels
from darksim.playback import segment_hamiltonians
from darksim.pulses import two_tone_segment
from darksim.spinsys import OPS, SpinParams, probe_control_frequencies, singlet_projector

try:
    from darksim.kernels import _ckernels
except ImportError:
    _ckernels = None


def _workload():
    p = SpinParams()
    fp, fc = probe_control_frequencies(p)
    seg = two_tone_segment(3.2, 3.2, fp, fc)
    dt = 5e-5
    h = segment_hamiltonians(seg, p, dt)
    n = h.shape[0]
    rng = np.random.default_rng(0)
    coeffs = rng.normal(scale=1.5, size=(n, 2))
    ops = np.ascontiguousarray(np.stack([OPS.iz1, OPS.iz2]).astype(complex))
    model = calibrated_model()
    e_half = half_step_propagator(model, dt)
    return h, ops, coeffs, dt, e_half


def _time(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    h, ops, coeffs, dt, e_half = _workload()
    n = h.shape[0]
    records = np.empty((0, 4, 4), dtype=complex)

    def run(backend):
        rho = np.array(singlet_projector(), order="C")
        backend.evolve_slices(rho, h, ops, coeffs, dt, e_half, 0, records)
        return rho

    results = {}
    print(f"workload: {n} slices of 4x4 Strang-split Lindblad propagation")
    t_py = _time(lambda: run(_pykernels))
    results["python"] = t_py
    print(f"python  : {t_py * 1e3:9.2f} ms  ({n / t_py:,.0f} slices/s)")
    if _ckernels is None:
        print("cython  : extension not built")
        return
    t_cy = _time(lambda: run(_ckernels))
    results["cython"] = t_cy
    print(f"cython  : {t_cy * 1e3:9.2f} ms  ({n / t_cy:,.0f} slices/s)")
    print(f"speedup : {t_py / t_cy:.1f}x")
    err = np.max(np.abs(run(_pykernels) - run(_ckernels)))
    print(f"max |state difference| between backends: {err:.3e}")


if __name__ == "__main__":
    main()
