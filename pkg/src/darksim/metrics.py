"""Observables: correlation metric, deviation populations, FIDs and spectra.

The correlation between an evolved state and a theoretical target is the
normalized Frobenius overlap of their *traceless* parts,

    C = tr(rho_e' rho_t') / sqrt(tr(rho_e'^2) tr(rho_t'^2)),

which is the NMR-convention fidelity of deviation matrices: it is bounded
in [-1, 1] and distinguishes the singlet from the central triplet (their
correlation is exactly -1/3).
"""

import io
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .dynamics import RelaxationModel, lindblad_superoperator
from .errors import ZeroDeviation
from .spinsys import SpinParams, internal_hamiltonian, raising_lowering

_EYE4 = np.eye(4, dtype=complex)


def _traceless(rho):
    rho = np.asarray(rho, dtype=complex)
    return rho - (np.trace(rho) / 4.0) * _EYE4


def correlation(rho_exp, rho_th):
    """Normalized overlap of the traceless parts of two states.

    Raises
    ------
    ZeroDeviation
        If either input has Frobenius norm < 1e-12 after projection.
    """
    a = _traceless(rho_exp)
    b = _traceless(rho_th)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        raise ZeroDeviation("input has no traceless component to correlate")
    return float(np.real(np.trace(a.conj().T @ b)) / (na * nb))


def deviation_populations(rho):
    """Diagonal of the traceless part: (P00, P01, P10, P11), summing to 0."""
    return tuple(float(x) for x in np.real(np.diag(_traceless(rho))))


def add_measurement_noise(rho, sigma, rng):
    """Additive Gaussian perturbation with Hermiticity restoration.

    Models tomography readout noise: each matrix element receives an
    independent complex Gaussian of scale ``sigma``; the result is
    re-Hermitized.  The trace is preserved exactly.
    """
    rho = np.asarray(rho, dtype=complex)
    g = sigma * (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    g = 0.5 * (g + g.conj().T)
    g -= (np.trace(g) / 4.0) * _EYE4
    return rho + g


# ---------------------------------------------------------------------------
# FID and spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumResult:
    """DFT of an acquisition: zero-centered frequency axis (Hz), complex
    amplitude per bin, and the acquisition metadata."""

    frequency: np.ndarray
    amplitude: np.ndarray
    dt: float
    n_points: int
    broadening: float = 0.0


def simulate_fid(rho, p: SpinParams, model: RelaxationModel, dt, n, broadening=0.5):
    """Free-evolution acquisition s(k) = tr(rho(k dt) (I+1 + I+2)) e^(-b k dt).

    The state evolves under the internal Hamiltonian plus relaxation; the
    exponential line broadening is applied as an apodization factor.
    """
    if dt <= 0 or n < 2:
        raise ValueError("need dt > 0 and n >= 2")
    if dt * n > 30.0:
        raise ValueError(f"acquisition dt*n = {dt * n:.3g} s exceeds 30 s")
    ip1, _, ip2, _ = raising_lowering()
    # tr(rho A) = vec(rho) . vec(A^T) in the row-major convention
    detect = (ip1 + ip2).T.reshape(-1)
    step = expm(lindblad_superoperator(internal_hamiltonian(p), model) * dt)
    v = np.asarray(rho, dtype=complex).reshape(-1)
    fid = np.empty(n, dtype=complex)
    decay = np.exp(-broadening * dt)
    weight = 1.0
    for k in range(n):
        fid[k] = np.dot(detect, v) * weight
        v = step @ v
        weight *= decay
    return fid


def spectrum_from_fid(fid, dt, zero_fill=1, broadening=0.0):
    """Zero-centered DFT of an FID, scaled by ``dt`` (continuous-FT units).

    ``zero_fill`` >= 1 pads the record by that factor for finer frequency
    interpolation.  The padded length is forced odd so the frequency grid
    is exactly symmetric about zero; Parseval's identity
    sum|fid|^2 dt = sum|spectrum|^2 df then holds exactly.
    """
    fid = np.asarray(fid, dtype=complex)
    n = fid.size
    if n < 2:
        raise ValueError("need at least 2 FID points")
    m = int(n * zero_fill)
    if m % 2 == 0:
        m += 1
    amp = np.fft.fftshift(np.fft.fft(fid, n=m)) * dt
    freq = np.fft.fftshift(np.fft.fftfreq(m, dt))
    return SpectrumResult(
        frequency=freq, amplitude=amp, dt=dt, n_points=n, broadening=broadening
    )


def spectrum_peaks(spec: SpectrumResult, rel_threshold=0.05, min_separation=1.0):
    """Local maxima of |amplitude| above ``rel_threshold`` * global max.

    Maxima closer than ``min_separation`` (Hz) merge into the larger one.
    Returns a list of (frequency_Hz, magnitude) sorted by frequency.
    """
    mag = np.abs(spec.amplitude)
    thr = rel_threshold * mag.max()
    idx = np.nonzero((mag[1:-1] >= mag[:-2]) & (mag[1:-1] > mag[2:]) & (mag[1:-1] > thr))[0] + 1
    peaks = []
    for i in idx:
        f, m = spec.frequency[i], mag[i]
        if peaks and abs(f - peaks[-1][0]) < min_separation:
            if m > peaks[-1][1]:
                peaks[-1] = (f, m)
        else:
            peaks.append((f, m))
    return [(float(f), float(m)) for f, m in peaks]


def spectrum_to_text(spec: SpectrumResult, include_imag=False):
    """Two-column (frequency, real) or three-column (+imag) plain text."""
    buf = io.StringIO()
    buf.write(
        "# darksim-spectrum v1"
        f" dt={spec.dt!r} n_points={spec.n_points}"
        f" broadening={spec.broadening!r}\n"
    )
    cols = "frequency_Hz real_amplitude" + (" imag_amplitude" if include_imag else "")
    buf.write(f"# {cols}\n")
    for k in range(spec.frequency.size):
        row = f"{spec.frequency[k]:.12g} {spec.amplitude[k].real:.12g}"
        if include_imag:
            row += f" {spec.amplitude[k].imag:.12g}"
        buf.write(row + "\n")
    return buf.getvalue()
