"""Design of RF-inhomogeneity-robust modulated pulses.

The pulse is parameterized as a small number of constant-envelope single-tone
segments (duration, amplitude, phase, offset each).  Its quality is the
weighted fidelity of dark-state preservation and spectator isolation,

    F(scale) = w_dark |<S0| U_I |S0>|^2 + w_spec |<11| U_I |11>|^2,

evaluated on the propagator with all amplitudes multiplied by an RF scale
factor and transformed to the internal-Hamiltonian interaction frame
(U_I = exp(+2j pi H_int T) U), so that a pulse which merely lets the state
follow its free evolution scores 1.  Robustness is the weighted average of
F over a discrete distribution of scale factors.

Each constant segment has a closed-form propagator: in the frame co-rotating
with its tone the Hamiltonian is static (H_int commutes with Iz12), so no
time slicing is needed and one objective evaluation costs a handful of 4x4
eigendecompositions.
"""

import io
from dataclasses import dataclass, field, replace

import numpy as np

from .numlin import mat_exp_hermitian
from .playback import ideal_propagator
from .pulses import PulseSegment, Sequence
from .spinsys import OPS, SpinParams, internal_hamiltonian, singlet_triplet_states

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PulseParameterization:
    """Piecewise-constant single-tone pulse with a fixed total duration.

    ``durations`` are stored as given but always used renormalized so they
    sum to ``total_duration``; amplitudes and offsets are clipped to bounds
    on construction.
    """

    durations: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    offsets: np.ndarray
    total_duration: float = 0.240
    amplitude_bounds: tuple = (0.0, 10.0)
    offset_bounds: tuple = (-250.0, 250.0)

    def __post_init__(self):
        for name in ("durations", "amplitudes", "phases", "offsets"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), float))
        if not (
            self.durations.shape
            == self.amplitudes.shape
            == self.phases.shape
            == self.offsets.shape
        ) or self.durations.ndim != 1 or self.durations.size < 1:
            raise ValueError("need matching 1-d parameter arrays")
        if np.any(self.durations <= 0):
            raise ValueError("durations must be > 0")
        if self.total_duration <= 0:
            raise ValueError("total_duration must be > 0")
        object.__setattr__(
            self,
            "amplitudes",
            np.clip(self.amplitudes, *self.amplitude_bounds),
        )
        object.__setattr__(self, "offsets", np.clip(self.offsets, *self.offset_bounds))

    @property
    def n_segments(self):
        return self.durations.size

    def normalized_durations(self):
        return self.durations * (self.total_duration / self.durations.sum())

    def flatten(self):
        return np.concatenate(
            [self.durations, self.amplitudes, self.phases, self.offsets]
        )

    def with_vector(self, x):
        n = self.n_segments
        return replace(
            self,
            durations=x[:n],
            amplitudes=x[n : 2 * n],
            phases=x[2 * n : 3 * n],
            offsets=x[3 * n :],
        )

    def to_segments(self, scale=1.0, samples_per_segment=1):
        """Render as PulseSegment items (one per constant piece)."""
        out = []
        for d, a, ph, off in zip(
            self.normalized_durations(), self.amplitudes, self.phases, self.offsets
        ):
            out.append(
                PulseSegment(
                    duration=float(d),
                    amplitudes=np.full(samples_per_segment, scale * a),
                    phases=np.full(samples_per_segment, ph),
                    carrier_offset=float(off),
                    label="modulated",
                )
            )
        return out


@dataclass(frozen=True)
class RFDistribution:
    """Discrete RF amplitude-scale distribution (quadrature grid)."""

    scales: tuple = (0.90, 0.95, 1.00, 1.05, 1.10)
    weights: tuple = (0.1, 0.2, 0.4, 0.2, 0.1)

    def __post_init__(self):
        scales = tuple(float(s) for s in self.scales)
        weights = tuple(float(w) for w in self.weights)
        if len(scales) != len(weights) or not scales:
            raise ValueError("scales and weights must match and be non-empty")
        if any(s <= 0 for s in scales) or any(w < 0 for w in weights):
            raise ValueError("scales must be > 0 and weights >= 0")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "weights", weights)


def _default_states():
    s0 = singlet_triplet_states()[0]
    e11 = np.zeros(4, dtype=complex)
    e11[3] = 1.0
    return s0, e11


@dataclass(frozen=True)
class ObjectiveSpec:
    """States and weights defining the fidelity objective."""

    dark_state: np.ndarray = field(default_factory=lambda: _default_states()[0])
    spectator: np.ndarray = field(default_factory=lambda: _default_states()[1])
    weights: tuple = (0.7, 0.3)

    def __post_init__(self):
        for name in ("dark_state", "spectator"):
            v = np.asarray(getattr(self, name), complex)
            if abs(np.linalg.norm(v) - 1.0) > 1e-10:
                raise ValueError(f"{name} must be normalized")
            object.__setattr__(self, name, v)
        w = tuple(float(x) for x in self.weights)
        if len(w) != 2 or min(w) < 0 or abs(sum(w) - 1.0) > 1e-12:
            raise ValueError("weights must be two non-negatives summing to 1")
        object.__setattr__(self, "weights", w)


# ---------------------------------------------------------------------------
# Fidelity
# ---------------------------------------------------------------------------

def segment_train_propagator(params: PulseParameterization, scale, p: SpinParams):
    """Exact propagator of the piecewise-constant pulse.

    Per segment, in the frame co-rotating with the tone at offset f the
    Hamiltonian H' = H_int - f Iz12 + amp (cos(phi) Ix12 + sin(phi) Iy12)
    is static, so U_seg = W(t1)+ exp(-2j pi H' d) W(t0) with
    W(t) = exp(+2j pi f t Iz12); segments compose with global-time carrier
    phases, making the train phase-continuous by construction.
    """
    h_int = internal_hamiltonian(p)
    iz = np.diag(OPS.iz12).real  # Iz12 is diagonal
    u = np.eye(4, dtype=complex)
    t = 0.0
    for d, a, ph, f in zip(
        params.normalized_durations(), params.amplitudes, params.phases, params.offsets
    ):
        h_rot = (
            h_int
            - f * OPS.iz12
            + scale * a * (np.cos(ph) * OPS.ix12 + np.sin(ph) * OPS.iy12)
        )
        u_rot = mat_exp_hermitian(h_rot, _TWO_PI * d)
        w0 = np.exp(2j * np.pi * f * t * iz)
        w1 = np.exp(-2j * np.pi * f * (t + d) * iz)
        u = (w1[:, None] * u_rot * w0[None, :]) @ u
        t += d
    return u


def _pulse_unitary(pulse, scale, p):
    if isinstance(pulse, PulseParameterization):
        return segment_train_propagator(pulse, scale, p), pulse.total_duration
    if isinstance(pulse, PulseSegment):
        pulse = Sequence((pulse,))
    scaled = Sequence(
        tuple(
            replace(item, amplitudes=scale * item.amplitudes)
            if isinstance(item, PulseSegment)
            else item
            for item in pulse.items
        )
    )
    return ideal_propagator(scaled, p), scaled.total_duration


def pulse_fidelity(pulse, scale, spec: ObjectiveSpec, p: SpinParams):
    """F(scale) in [0, 1]; ``pulse`` is a parameterization, segment, or
    sequence; amplitudes are multiplied by ``scale``."""
    u, duration = _pulse_unitary(pulse, scale, p)
    u_i = mat_exp_hermitian(internal_hamiltonian(p), -_TWO_PI * duration) @ u
    w_dark, w_spec = spec.weights
    f_dark = abs(spec.dark_state.conj() @ u_i @ spec.dark_state) ** 2
    f_spec = abs(spec.spectator.conj() @ u_i @ spec.spectator) ** 2
    return float(w_dark * f_dark + w_spec * f_spec)


def average_fidelity(pulse, dist: RFDistribution, spec: ObjectiveSpec, p: SpinParams):
    """Weighted mean of pulse_fidelity over the scale grid (fixed order)."""
    return float(
        sum(w * pulse_fidelity(pulse, s, spec, p) for s, w in zip(dist.scales, dist.weights))
    )


def worst_case_fidelity(pulse, dist, spec, p):
    return float(min(pulse_fidelity(pulse, s, spec, p) for s in dist.scales))


def naive_two_tone_params(
    p: SpinParams, amplitude=2.0, n_segments=6, total_duration=0.240
):
    """Time-multiplexed two-tone baseline: segments alternate between the
    probe and control offsets at doubled amplitude (same average drive)."""
    from .spinsys import probe_control_frequencies

    fp, fc = probe_control_frequencies(p)
    offsets = np.where(np.arange(n_segments) % 2 == 0, fp, fc)
    return PulseParameterization(
        durations=np.full(n_segments, total_duration / n_segments),
        amplitudes=np.full(n_segments, 2.0 * amplitude),
        phases=np.zeros(n_segments),
        offsets=offsets.astype(float),
        total_duration=total_duration,
    )


# ---------------------------------------------------------------------------
# Derivative-free search
# ---------------------------------------------------------------------------

def _fold(x, lo, hi):
    """Reflect a real value into [lo, hi] (triangle-wave fold)."""
    if hi <= lo:
        return lo
    period = 2.0 * (hi - lo)
    y = (x - lo) % period
    return lo + (period - y if y > hi - lo else y)


_FOLD = np.vectorize(_fold)


class _Budget(Exception):
    pass


def optimize_pulse(
    init: PulseParameterization,
    dist: RFDistribution,
    spec: ObjectiveSpec,
    p: SpinParams,
    budget=5000,
):
    """Downhill-simplex search with deterministic restarts.

    Returns ``(best_params, history)`` where ``history[k]`` is the best
    objective value (1 - average fidelity is minimized; the history stores
    the fidelity) seen up to evaluation k; it is non-decreasing.  The
    search is deterministic given ``init`` and ``budget``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    from scipy.optimize import minimize

    n = init.n_segments
    lo = np.concatenate(
        [
            np.full(n, 0.1),
            np.full(n, init.amplitude_bounds[0]),
            np.full(n, -2.0 * np.pi),
            np.full(n, init.offset_bounds[0]),
        ]
    )
    hi = np.concatenate(
        [
            np.full(n, 1.0),
            np.full(n, init.amplitude_bounds[1]),
            np.full(n, 2.0 * np.pi),
            np.full(n, init.offset_bounds[1]),
        ]
    )

    # durations enter the vector pre-scaled into the fold window
    x0 = init.flatten()
    x0[:n] = 0.1 + 0.8 * (init.durations / init.durations.max())

    state = {"count": 0, "best": -np.inf, "best_x": x0.copy(), "history": []}

    def params_of(x):
        xf = _FOLD(x, lo, hi)
        return init.with_vector(xf)

    def objective(x):
        if state["count"] >= budget:
            raise _Budget
        f = average_fidelity(params_of(x), dist, spec, p)
        state["count"] += 1
        if f > state["best"]:
            state["best"] = f
            state["best_x"] = np.array(x, dtype=float)
        state["history"].append(state["best"])
        return 1.0 - f

    try:
        objective(x0)
        restart = 0
        while state["count"] < budget:
            start = state["best_x"]
            if restart > 0:
                rng = np.random.default_rng(restart)
                start = start + rng.normal(scale=0.05 * (hi - lo))
            minimize(
                objective,
                start,
                method="Nelder-Mead",
                options={
                    "maxfev": budget - state["count"],
                    "xatol": 1e-8,
                    "fatol": 1e-10,
                },
            )
            restart += 1
    except _Budget:
        pass

    return params_of(state["best_x"]), np.asarray(state["history"])


def history_to_csv(history):
    """CSV text of the monotone-best objective history."""
    buf = io.StringIO()
    buf.write("eval_index,objective\n")
    for k, v in enumerate(history):
        buf.write(f"{k},{v:.12g}\n")
    return buf.getvalue()
