"""Two-spin-1/2 physical model.

Basis ordering is ``(|00>, |01>, |10>, |11>)`` with ``|0>`` the low-energy
(spin-up) state.  The internal Hamiltonian in the rotating frame of the mean
Larmor frequency is

    H_int = (delta_nu / 2) Iz1 - (delta_nu / 2) Iz2 + J I1.I2     [Hz]

and RF fields at a nonzero carrier offset precess in this frame (co-rotating
vector, counter-rotating terms dropped).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabeling
from .numlin import kron

_SX = np.array([[0.0, 0.5], [0.5, 0.0]], dtype=complex)
_SY = np.array([[0.0, -0.5j], [0.5j, 0.0]], dtype=complex)
_SZ = np.array([[0.5, 0.0], [0.0, -0.5]], dtype=complex)
_ID2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class SpinParams:
    """Chemical-shift difference and scalar coupling, both in Hz."""

    delta_nu: float = 270.3
    j_coupling: float = 4.1

    def __post_init__(self):
        if self.delta_nu < 0:
            raise ValueError("delta_nu must be >= 0 (sign absorbed into labeling)")


@dataclass(frozen=True)
class RFField:
    """A single RF tone in the rotating frame.

    amplitude : Hz, the nutation frequency nu_12
    phase : radians in [0, 2*pi)
    carrier_offset : Hz relative to the mean Larmor frequency
    """

    amplitude: float
    phase: float = 0.0
    carrier_offset: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if not 0.0 <= self.phase < 2.0 * np.pi:
            object.__setattr__(self, "phase", float(self.phase) % (2.0 * np.pi))


@dataclass(frozen=True)
class SpinOperators:
    """The single-spin product operators plus the collective transverse ones."""

    ix1: np.ndarray
    iy1: np.ndarray
    iz1: np.ndarray
    ix2: np.ndarray
    iy2: np.ndarray
    iz2: np.ndarray
    ix12: np.ndarray
    iy12: np.ndarray
    iz12: np.ndarray
    dot12: np.ndarray  # I1.I2


def spin_operators():
    ix1, iy1, iz1 = (kron(s, _ID2) for s in (_SX, _SY, _SZ))
    ix2, iy2, iz2 = (kron(_ID2, s) for s in (_SX, _SY, _SZ))
    dot12 = ix1 @ ix2 + iy1 @ iy2 + iz1 @ iz2
    return SpinOperators(
        ix1=ix1, iy1=iy1, iz1=iz1,
        ix2=ix2, iy2=iy2, iz2=iz2,
        ix12=ix1 + ix2, iy12=iy1 + iy2, iz12=iz1 + iz2,
        dot12=dot12,
    )


OPS = spin_operators()


def raising_lowering():
    """Single-spin raising/lowering operators (ip1, im1, ip2, im2)."""
    return (
        OPS.ix1 + 1j * OPS.iy1,
        OPS.ix1 - 1j * OPS.iy1,
        OPS.ix2 + 1j * OPS.iy2,
        OPS.ix2 - 1j * OPS.iy2,
    )


def internal_hamiltonian(p: SpinParams):
    """Internal Hamiltonian in Hz; reduces to J I1.I2 for delta_nu = 0."""
    return 0.5 * p.delta_nu * (OPS.iz1 - OPS.iz2) + p.j_coupling * OPS.dot12


def rf_hamiltonian(field: RFField, p: SpinParams, t: float):
    """RF term at frame time ``t`` (seconds).

    At zero offset and phase this is exactly ``amplitude * Ix12``; at a
    nonzero offset the field vector precesses in the rotating frame.
    """
    ang = 2.0 * np.pi * field.carrier_offset * t + field.phase
    return field.amplitude * (np.cos(ang) * OPS.ix12 + np.sin(ang) * OPS.iy12)


def singlet_triplet_states():
    """Return (S0, T1, T0, Tm1) as unit state vectors."""
    s0 = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2.0)
    t1 = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
    t0 = np.array([0.0, 1.0, 1.0, 0.0], dtype=complex) / np.sqrt(2.0)
    tm1 = np.array([0.0, 0.0, 0.0, 1.0], dtype=complex)
    return s0, t1, t0, tm1


def singlet_projector():
    s0 = singlet_triplet_states()[0]
    return np.outer(s0, s0.conj())


def singlet_deviation():
    """Traceless deviation matrix proportional to the pseudopure singlet."""
    return singlet_projector() - np.eye(4, dtype=complex) / 4.0


def equilibrium_deviation():
    """Iz1 + Iz2 = diag(1, 0, 0, -1) (high-temperature deviation matrix)."""
    return (OPS.iz1 + OPS.iz2).copy()


def eigenstates_by_basis_label(p: SpinParams):
    """Eigen-decompose H_int and label eigenstates by dominant basis overlap.

    Returns (energies, vectors) ordered by basis-state label, i.e. entry
    ``k`` is the eigenstate whose squared overlap with computational basis
    state ``k`` is maximal.
    """
    w, v = np.linalg.eigh(internal_hamiltonian(p))
    labels = np.argmax(np.abs(v) ** 2, axis=0)
    if len(set(labels.tolist())) != 4:
        raise DegenerateLabeling(
            f"ambiguous eigenstate labeling (labels {labels.tolist()})"
        )
    order = np.argsort(labels)
    return w[order], v[:, order]


def transition_frequency(p: SpinParams, level_a: int, level_b: int):
    """E(b) - E(a) in Hz between eigenstates labeled by basis indices."""
    w, _ = eigenstates_by_basis_label(p)
    return float(w[level_b] - w[level_a])


def probe_control_frequencies(p: SpinParams):
    """(probe, control) offsets: |00>-|01> and |00>-|10> transitions."""
    return transition_frequency(p, 0, 1), transition_frequency(p, 0, 2)


def check_density_matrix(rho, trace_tol=1e-10, eig_tol=1e-9):
    """Validate unit trace, Hermiticity, and positive semidefiniteness."""
    rho = np.asarray(rho, dtype=complex)
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise ValueError(f"trace {np.trace(rho)} != 1")
    if np.max(np.abs(rho - rho.conj().T)) > trace_tol:
        raise ValueError("density matrix not Hermitian")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -eig_tol:
        raise ValueError("density matrix not positive semidefinite")
    return rho


def check_deviation_matrix(rho, trace_tol=1e-10):
    """Validate zero trace and Hermiticity of a deviation matrix."""
    rho = np.asarray(rho, dtype=complex)
    if abs(np.trace(rho)) > trace_tol:
        raise ValueError(f"deviation trace {np.trace(rho)} != 0")
    if np.max(np.abs(rho - rho.conj().T)) > trace_tol:
        raise ValueError("deviation matrix not Hermitian")
    return rho
