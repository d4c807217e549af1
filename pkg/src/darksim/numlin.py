"""Dense complex matrix kernel for small operators and superoperators.

Everything in the simulator runs on 2x2 / 4x4 operators and 16x16
superoperators, so all routines here favour exactness and stability over
large-dimension performance.  Hamiltonians are stored in Hz throughout the
package (energy divided by the Planck constant), so a propagator over
``t`` seconds is ``mat_exp_hermitian(h, 2 * pi * t)``.
"""

import numpy as np

from .errors import DimMismatch, NotHermitian

# Structural checks (hermiticity, unitarity) use STRUCT_TOL; comparisons
# against independent oracles use ORACLE_TOL.
STRUCT_TOL = 1e-12
ORACLE_TOL = 1e-10


def as_square(a):
    """Coerce to a complex square 2-D array, validating shape."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatch(f"expected a square matrix, got shape {a.shape}")
    return a


def is_hermitian(a, tol=STRUCT_TOL):
    a = as_square(a)
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def is_unitary(a, tol=STRUCT_TOL):
    a = as_square(a)
    eye = np.eye(a.shape[0])
    return bool(np.max(np.abs(a.conj().T @ a - eye)) <= tol)


def kron(a, b):
    """Kronecker product; dim(out) = dim(a) * dim(b)."""
    return np.kron(as_square(a), as_square(b))


def mat_exp_hermitian(h, angle_scale):
    """Unitary ``exp(-1j * angle_scale * h)`` for Hermitian ``h``.

    Uses the eigendecomposition (diagonalize, exponentiate the spectrum,
    rotate back), which is exact to roundoff for the Hermitian generators
    used here.

    Raises
    ------
    NotHermitian
        If ``h`` deviates from Hermiticity by more than ``STRUCT_TOL``.
    """
    h = as_square(h)
    if not is_hermitian(h, STRUCT_TOL):
        raise NotHermitian("generator is not Hermitian within 1e-12")
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * angle_scale * w)
    return (v * phases) @ v.conj().T


def frobenius_inner(a, b):
    """Frobenius inner product ``trace(a^dagger b)``."""
    a = as_square(a)
    b = as_square(b)
    if a.shape != b.shape:
        raise DimMismatch(f"dim mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def frobenius_norm(a):
    return float(np.linalg.norm(as_square(a)))
