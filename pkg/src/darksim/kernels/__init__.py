"""Kernel backend selection.

The compiled Cython extension is preferred; a pure-NumPy implementation
with identical semantics is used when the extension is unavailable or when
``DARKSIM_FORCE_PYTHON_KERNELS`` is set (used by the kernel benchmark and
the cross-check tests).
"""

import os

from . import _pykernels

if os.environ.get("DARKSIM_FORCE_PYTHON_KERNELS"):
    _backend = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _backend

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - build-environment dependent
        _backend = _pykernels
        BACKEND = "python"

evolve_slices = _backend.evolve_slices
propagator_slices = _backend.propagator_slices

__all__ = ["BACKEND", "evolve_slices", "propagator_slices", "_pykernels"]
