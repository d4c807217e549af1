"""Scenario runner: each experiment as a numeric result table.

``run_scenario`` dispatches on ``cfg.scenario``:

* ``lifetimes`` — fitted T1 and singlet lifetime of the (possibly
  auto-calibrated) relaxation model.
* ``fig3a`` — singlet correlation vs time under (i) free evolution,
  (ii) probe only, (iii) probe + control.
* ``fig3b`` — deviation populations vs time under condition (iii).
* ``fig4a`` — correlation vs tone offset (endpoint and train-mean).
* ``fig4b`` — correlation vs probe/control amplitude ratio.
* ``spectra`` — the three excitation-spectrum traces.
* ``optimize`` — naive vs optimized two-tone pulse fidelity table.

All results come back as a :class:`ResultSeries`; ``write_csv`` renders it
with a '#'-prefixed metadata block (full resolved config and seed) so a
rerun with the same config is byte-identical.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernels
from .config import ExperimentConfig, emit_config
from .dynamics import (
    NoiseProcess,
    PropagationConfig,
    RelaxationModel,
    RFField,
    _max_workers,
    fit_relaxation_rates,
    simulate_singlet_lifetime,
    simulate_t1,
    stochastic_trajectory_records,
)
from .metrics import correlation, deviation_populations, simulate_fid, spectrum_from_fid
from .optctrl import (
    ObjectiveSpec,
    RFDistribution,
    average_fidelity,
    naive_two_tone_params,
    optimize_pulse,
    pulse_fidelity,
    worst_case_fidelity,
)
from .playback import (
    evolve_sequence,
    ideal_propagator,
    interaction_frame,
    train_hamiltonians,
)
from .pulses import (
    Delay,
    IdealPulse,
    Sequence,
    SpinLock,
    gaussian_probe_segment,
    singlet_prep_sequence,
    two_tone_segment,
)
from .spinsys import (
    SpinParams,
    equilibrium_deviation,
    internal_hamiltonian,
    probe_control_frequencies,
    singlet_deviation,
    singlet_projector,
)

SEGMENT_DURATION = 0.240  # s, the fixed two-tone irradiation unit


@dataclass
class ResultSeries:
    """Rectangular numeric result with named columns and a metadata block."""

    columns: tuple
    rows: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if self.rows.shape[1] != len(self.columns):
            raise ValueError("row width does not match column count")
        if "time_s" in self.columns:
            t = self.column("time_s")
            if np.any(np.diff(t) <= 0):
                raise ValueError("time column must be strictly increasing")

    def column(self, name):
        return self.rows[:, self.columns.index(name)]


def write_csv(rs: ResultSeries, path):
    """Write a ResultSeries as CSV with '#' metadata headers, 12 sig digits."""
    with open(path, "w") as fh:
        fh.write(result_csv_text(rs))


def result_csv_text(rs: ResultSeries):
    lines = [f"# darksim-result v{__version__} (see metadata below)"]
    for key, value in rs.metadata.items():
        lines.append(f"# {key} = {value}")
    lines.append(",".join(rs.columns))
    for row in rs.rows:
        lines.append(",".join(f"{x:.12g}" for x in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------

def _spin_params(cfg):
    return SpinParams(
        delta_nu=cfg.get("spin.delta_nu"), j_coupling=cfg.get("spin.j_coupling")
    )


def _relaxation_model(cfg, p):
    mode = cfg.get("relaxation.mode")
    if mode == "none":
        return RelaxationModel(0.0, 0.0, 0.0, 0.0)
    if mode == "explicit":
        return RelaxationModel(
            flip_rate_per_spin=cfg.get("relaxation.flip_rate_per_spin"),
            uncorrelated_dephasing_rate=cfg.get("relaxation.uncorrelated_dephasing"),
            correlated_dephasing_rate=cfg.get("relaxation.correlated_dephasing"),
            collective_flip_rate=cfg.get("relaxation.collective_flip_rate"),
        )
    return fit_relaxation_rates(
        cfg.get("relaxation.t1_target"),
        cfg.get("relaxation.ts_target"),
        lock_field=RFField(amplitude=cfg.get("lock.amplitude")),
        p=p,
    )


def _noise(cfg, seed):
    rms = cfg.get("noise.rms_amplitude") if cfg.get("noise.enabled") else 0.0
    return NoiseProcess(
        rms_amplitude=rms,
        correlation_time=cfg.get("noise.correlation_time"),
        correlation_coefficient=cfg.get("noise.correlation_coefficient"),
        seed=seed,
    )


def _base_offsets(p, placement):
    """Tone carrier offsets (probe, control) for a placement convention.

    ``transitions`` puts each tone exactly on its single-quantum line;
    ``symmetric`` keeps the same tone *difference* (the two-photon
    resonance) but centers the pair about zero, which symmetrizes the
    cross-talk each tone exerts on the other transition.
    """
    fp, fc = probe_control_frequencies(p)
    if placement == "transitions":
        return fp, fc
    f0 = 0.5 * (fp - fc)
    return f0, -f0


def _model_metadata(model: RelaxationModel):
    return {
        "relaxation.fitted.flip_rate_per_spin": repr(model.flip_rate_per_spin),
        "relaxation.fitted.uncorrelated_dephasing": repr(
            model.uncorrelated_dephasing_rate
        ),
        "relaxation.fitted.correlated_dephasing": repr(
            model.correlated_dephasing_rate
        ),
        "relaxation.fitted.collective_flip_rate": repr(model.collective_flip_rate),
    }


def _metadata(cfg, extra=None):
    """Metadata block: backend, seed, and the full resolved config."""
    md = {"backend": kernels.BACKEND, "seed": cfg.seed}
    section = ""
    for line in emit_config(cfg).splitlines():
        if line.startswith("["):
            section = line.strip("[]")
        elif line.strip():
            name, value = line.split(" = ", 1)
            md[f"cfg.{section}.{name}"] = value
    if extra:
        md.update(extra)
    return md


# ---------------------------------------------------------------------------
# Shared evolution helpers
# ---------------------------------------------------------------------------

# Keep matrix elements between states of equal total z-quantum number
# (populations and the 01-10 zero-quantum block); a field-gradient crusher
# dephases everything else across the ensemble.
_CRUSHER_MASK = np.array(
    [[1, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 1]], dtype=float
)


def crush_transverse(rho):
    """Ensemble effect of a gradient crusher: zero all multi-quantum and
    single-quantum coherences, keeping populations and zero-quantum terms."""
    return np.asarray(rho, dtype=complex) * _CRUSHER_MASK


def prepare_singlet_state(cfg, p, model):
    """Equilibrium -> prep sequence -> spin lock, under the given model.

    Returns ``(state, budget)`` where the budget decomposes the correlation
    loss into the preparation step and the lock step.
    """
    dt = cfg.get("propagation.dt")
    rho0 = np.eye(4, dtype=complex) / 4.0 + equilibrium_deviation()
    prep = singlet_prep_sequence(p)
    pcfg = PropagationConfig(dt=dt)
    state = evolve_sequence(rho0, prep, p, model, pcfg)
    target = singlet_deviation()
    budget = {"prep_correlation": correlation(state, target)}
    duration = cfg.get("lock.duration")
    if duration > 0:
        lock = SpinLock(
            duration=duration,
            amplitude=cfg.get("lock.amplitude"),
            mode=cfg.get("lock.mode"),
        )
        state = evolve_sequence(state, Sequence((lock,)), p, model, pcfg)
        budget["lock_correlation"] = correlation(state, target)
    if cfg.get("lock.crusher"):
        state = crush_transverse(state)
        budget["crusher_correlation"] = correlation(state, target)
    return state, budget


def _initial_state(cfg, p, model):
    kind = cfg.get("fig3.initial_state")
    if kind == "singlet":
        return singlet_projector(), {}
    if kind == "equilibrium":
        return np.eye(4, dtype=complex) / 4.0 + equilibrium_deviation(), {}
    state, budget = prepare_singlet_state(cfg, p, model)
    return state, budget


def _monitored_run(cfg, p, model, rho0, items, dt, noise_seed, mask=None):
    """Evolve ``rho0`` through a sliced item train, recording periodically.

    Returns ``(times, interaction-frame records)`` on the configured record
    grid.  ``mask`` optionally multiplies the drive part of every slice
    Hamiltonian elementwise (used to switch off selectivity leakage).
    """
    h = train_hamiltonians(items, p, dt)
    if mask is not None:
        h_int = internal_hamiltonian(p)
        h = np.ascontiguousarray(h_int + mask * (h - h_int))
    stride = max(int(round(cfg.get("propagation.record_interval") / dt)), 1)
    n_rec = h.shape[0] // stride
    noise = _noise(cfg, noise_seed)
    n_traj = cfg.get("propagation.n_trajectories") if noise.rms_amplitude > 0 else 1
    _, records = stochastic_trajectory_records(
        rho0, h, dt, model, noise, stride, n_rec, n_traj
    )
    times = dt * stride * np.arange(1, n_rec + 1)
    return times, interaction_frame(records, times, p)


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------

def _run_lifetimes(cfg):
    p = _spin_params(cfg)
    model = _relaxation_model(cfg, p)
    lock = RFField(amplitude=cfg.get("lock.amplitude"))
    t1 = simulate_t1(model, p, cfg.get("lifetimes.t1_span"))
    ts = simulate_singlet_lifetime(model, p, lock, cfg.get("lifetimes.ts_span"))
    rows = [[cfg.get("relaxation.t1_target"), t1, cfg.get("relaxation.ts_target"), ts]]
    return ResultSeries(
        ("t1_target_s", "t1_fitted_s", "ts_target_s", "ts_fitted_s"),
        rows,
        _metadata(cfg, _model_metadata(model)),
    )


def _fig3_items(cfg, p, condition):
    """Item train for one Fig-3 condition over the monitored window."""
    amp = cfg.get("fig3.amplitude")
    reps = cfg.get("fig3.repetitions")
    off_p, off_c = _base_offsets(p, cfg.get("fig3.tone_placement"))
    if condition == "free":
        return [Delay(reps * SEGMENT_DURATION)]
    control_amp = amp if condition == "both" else 0.0
    return [
        two_tone_segment(amp, control_amp, off_p, off_c, start_time=k * SEGMENT_DURATION)
        for k in range(reps)
    ]


def _run_fig3a(cfg):
    p = _spin_params(cfg)
    model = _relaxation_model(cfg, p)
    rho0, budget = _initial_state(cfg, p, model)
    dt_rf = cfg.get("propagation.dt")
    dt_free = cfg.get("propagation.dt_free")
    seed = cfg.seed
    curves = {}
    for k, (condition, dt) in enumerate(
        [("free", dt_free), ("probe", dt_rf), ("both", dt_rf)]
    ):
        times, records = _monitored_run(
            cfg, p, model, rho0, _fig3_items(cfg, p, condition), dt, 4 * seed + k + 1
        )
        target = singlet_deviation()
        curves[condition] = np.array([correlation(r, target) for r in records])
    n = min(len(c) for c in curves.values())
    rows = np.column_stack(
        [times[:n], curves["free"][:n], curves["probe"][:n], curves["both"][:n]]
    )
    extra = {k: repr(v) for k, v in budget.items()}
    extra.update(_model_metadata(model))
    return ResultSeries(
        ("time_s", "correlation_free", "correlation_probe_only", "correlation_probe_control"),
        rows,
        _metadata(cfg, extra),
    )


_LEAKAGE_MASK = np.ones((4, 4))
_LEAKAGE_MASK[3, :3] = 0.0
_LEAKAGE_MASK[:3, 3] = 0.0


def _run_fig3b(cfg):
    p = _spin_params(cfg)
    model = _relaxation_model(cfg, p)
    rho0, budget = _initial_state(cfg, p, model)
    mask = None if cfg.get("fig3.leakage") else _LEAKAGE_MASK
    times, records = _monitored_run(
        cfg, p, model, rho0, _fig3_items(cfg, p, "both"),
        cfg.get("propagation.dt"), 4 * cfg.seed + 3, mask=mask,
    )
    pops = np.array([deviation_populations(r) for r in records])
    rows = np.column_stack([times, pops])
    extra = {k: repr(v) for k, v in budget.items()}
    extra.update(_model_metadata(model))
    return ResultSeries(("time_s", "p00", "p01", "p10", "p11"), rows, _metadata(cfg, extra))


def _sweep_correlations(p, model, items_of, grid, dt):
    """Endpoint and per-repetition-mean correlation for each grid value.

    Evaluations fan out to a worker pool; assembly is by grid index so the
    result is independent of completion order.
    """
    rho0 = singlet_projector()
    target = singlet_deviation()

    def one(idx):
        items = items_of(grid[idx])
        h = train_hamiltonians(items, p, dt)
        stride = max(int(round(SEGMENT_DURATION / dt)), 1)
        n_rec = h.shape[0] // stride
        noise = NoiseProcess(rms_amplitude=0.0, correlation_time=1.0, seed=0)
        _, records = stochastic_trajectory_records(
            rho0, h, dt, model, noise, stride, n_rec, 1
        )
        times = dt * stride * np.arange(1, n_rec + 1)
        records = interaction_frame(records, times, p)
        corrs = np.array([correlation(r, target) for r in records])
        return corrs[-1], corrs.mean()

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        results = list(pool.map(one, range(len(grid))))
    end = np.array([r[0] for r in results])
    mean = np.array([r[1] for r in results])
    return end, mean


def _grid(lo, hi, step):
    n = int(round((hi - lo) / step)) + 1
    if n < 1:
        raise ValueError("empty sweep grid")
    return lo + step * np.arange(n)


def _run_fig4a(cfg):
    p = _spin_params(cfg)
    model = _relaxation_model(cfg, p)
    amp = cfg.get("fig4a.amplitude")
    reps = cfg.get("fig4a.repetitions")
    mode = cfg.get("fig4a.offset_mode")
    base_p, base_c = _base_offsets(p, cfg.get("fig4a.tone_placement"))
    offsets = _grid(
        cfg.get("fig4a.offset_min"), cfg.get("fig4a.offset_max"),
        cfg.get("fig4a.offset_step"),
    )

    def items_of(delta):
        off_p = base_p + delta
        off_c = base_c + (delta if mode == "common" else -delta if mode == "antisymmetric" else 0.0)
        return [
            two_tone_segment(amp, amp, off_p, off_c, start_time=k * SEGMENT_DURATION)
            for k in range(reps)
        ]

    end, mean = _sweep_correlations(p, model, items_of, offsets, cfg.get("propagation.dt"))
    rows = np.column_stack([offsets, end, mean])
    return ResultSeries(
        ("offset_hz", "correlation_end", "correlation_mean"), rows, _metadata(cfg)
    )


def _run_fig4b(cfg):
    p = _spin_params(cfg)
    model = _relaxation_model(cfg, p)
    nu0 = cfg.get("fig4b.nu0")
    reps = cfg.get("fig4b.repetitions")
    off_p, off_c = _base_offsets(p, cfg.get("fig4b.tone_placement"))
    ratios = _grid(
        cfg.get("fig4b.ratio_min"), cfg.get("fig4b.ratio_max"), cfg.get("fig4b.ratio_step")
    )

    def items_of(ratio):
        return [
            two_tone_segment(ratio * nu0, nu0, off_p, off_c, start_time=k * SEGMENT_DURATION)
            for k in range(reps)
        ]

    end, mean = _sweep_correlations(p, model, items_of, ratios, cfg.get("propagation.dt"))
    rows = np.column_stack([ratios, end, mean])
    return ResultSeries(
        ("ratio", "correlation_end", "correlation_mean"), rows, _metadata(cfg)
    )


def _run_spectra(cfg):
    p = _spin_params(cfg)
    model = _relaxation_model(cfg, p)
    dt = cfg.get("spectra.dt")
    n = cfg.get("spectra.n_points")
    zero_fill = cfg.get("spectra.zero_fill")
    broadening = cfg.get("spectra.broadening")
    rho_eq = np.eye(4, dtype=complex) / 4.0 + equilibrium_deviation()
    fp, fc = probe_control_frequencies(p)
    amp = cfg.get("spectra.two_tone_amplitude")

    probe_seg = gaussian_probe_segment(
        p,
        duration=cfg.get("spectra.probe_duration"),
        flip_area=np.deg2rad(cfg.get("spectra.probe_flip_deg")),
    )
    two_tone = two_tone_segment(
        amp, amp, fp, fc, duration=cfg.get("spectra.two_tone_duration")
    )
    traces = {}
    for name, excitation in (
        ("probe", Sequence((probe_seg,))),
        ("two_tone", Sequence((two_tone,))),
        ("reference", Sequence((IdealPulse(np.pi / 2.0, np.pi / 2.0),))),
    ):
        u = ideal_propagator(excitation, p, dt=cfg.get("propagation.dt"))
        state = u @ rho_eq @ u.conj().T
        fid = simulate_fid(state, p, model, dt, n, broadening=broadening)
        traces[name] = spectrum_from_fid(fid, dt, zero_fill=zero_fill)
    freq = traces["probe"].frequency
    rows = np.column_stack(
        [freq]
        + [
            col
            for name in ("probe", "two_tone", "reference")
            for col in (traces[name].amplitude.real, traces[name].amplitude.imag)
        ]
    )
    return ResultSeries(
        (
            "frequency_hz",
            "probe_real", "probe_imag",
            "two_tone_real", "two_tone_imag",
            "reference_real", "reference_imag",
        ),
        rows,
        _metadata(cfg),
    )


def _run_optimize(cfg):
    p = _spin_params(cfg)
    dist = RFDistribution()
    spec = ObjectiveSpec(
        weights=(cfg.get("optimize.weight_dark"), cfg.get("optimize.weight_spectator"))
    )
    naive = naive_two_tone_params(
        p, amplitude=cfg.get("optimize.amplitude"),
        n_segments=cfg.get("optimize.n_segments"),
    )
    best, history = optimize_pulse(naive, dist, spec, p, budget=cfg.get("optimize.budget"))
    rows = [
        [scale, pulse_fidelity(naive, scale, spec, p), pulse_fidelity(best, scale, spec, p)]
        for scale in dist.scales
    ]
    extra = {
        "average_fidelity_naive": repr(average_fidelity(naive, dist, spec, p)),
        "average_fidelity_optimized": repr(average_fidelity(best, dist, spec, p)),
        "worst_case_fidelity_naive": repr(worst_case_fidelity(naive, dist, spec, p)),
        "worst_case_fidelity_optimized": repr(worst_case_fidelity(best, dist, spec, p)),
        "n_evaluations": len(history),
    }
    rs = ResultSeries(
        ("rf_scale", "fidelity_naive", "fidelity_optimized"), rows, _metadata(cfg, extra)
    )
    # stash the non-tabular artifacts for the CLI to export
    rs.optimized_pulse = best
    rs.history = history
    return rs


_RUNNERS = {
    "lifetimes": _run_lifetimes,
    "fig3a": _run_fig3a,
    "fig3b": _run_fig3b,
    "fig4a": _run_fig4a,
    "fig4b": _run_fig4b,
    "spectra": _run_spectra,
    "optimize": _run_optimize,
}


def run_scenario(cfg: ExperimentConfig):
    """Run the configured scenario and return its ResultSeries."""
    return _RUNNERS[cfg.scenario](cfg)
