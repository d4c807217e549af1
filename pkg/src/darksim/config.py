"""Experiment configuration: sectioned ``key = value`` text format.

A config file is a sequence of ``[section]`` headers and ``key = value``
lines; ``#`` starts a comment.  Every key is validated against a fixed
schema (type, bounds, choices) and unknown keys are hard errors.  Parsing
fills unset keys with their defaults (some defaults depend on the scenario,
see ``SCENARIO_DEFAULTS``) so a parsed config is always fully resolved;
``emit_config`` writes it back out such that ``parse_config(emit_config(c))``
reproduces ``c`` field for field.
"""

import math
from dataclasses import dataclass, field

from .errors import ConfigError, ParseError, UnknownKey

SCENARIOS = ("lifetimes", "fig3a", "fig3b", "fig4a", "fig4b", "spectra", "optimize")


@dataclass(frozen=True)
class KeySpec:
    """Schema entry for one config key."""

    kind: str  # 'float' | 'int' | 'bool' | 'choice'
    default: object
    low: float = -math.inf
    high: float = math.inf
    choices: tuple = ()
    exclusive_low: bool = False


def _f(default, low=-math.inf, high=math.inf, exclusive_low=False):
    return KeySpec("float", default, low, high, exclusive_low=exclusive_low)


def _i(default, low=-math.inf, high=math.inf):
    return KeySpec("int", default, low, high)


def _b(default):
    return KeySpec("bool", default)


def _c(default, choices):
    return KeySpec("choice", default, choices=choices)


SCHEMA = {
    "scenario.name": _c(None, SCENARIOS),
    "scenario.seed": _i(0, low=0),
    "spin.delta_nu": _f(270.3, low=0.0),
    "spin.j_coupling": _f(4.1, low=0.0, exclusive_low=True),
    "relaxation.mode": _c("calibrated", ("calibrated", "explicit", "none")),
    "relaxation.t1_target": _f(6.3, low=0.0, exclusive_low=True),
    "relaxation.ts_target": _f(12.0, low=0.0, exclusive_low=True),
    "relaxation.flip_rate_per_spin": _f(0.0, low=0.0),
    "relaxation.uncorrelated_dephasing": _f(0.0, low=0.0),
    "relaxation.correlated_dephasing": _f(0.0, low=0.0),
    "relaxation.collective_flip_rate": _f(0.0, low=0.0),
    "noise.enabled": _b(True),
    "noise.rms_amplitude": _f(1.5, low=0.0),
    "noise.correlation_time": _f(0.05, low=0.0, exclusive_low=True),
    "noise.correlation_coefficient": _f(0.0, low=-1.0, high=1.0),
    "propagation.dt": _f(5e-5, low=0.0, exclusive_low=True),
    "propagation.dt_free": _f(1e-3, low=0.0, exclusive_low=True),
    "propagation.method": _c("exact-slice", ("exact-slice", "fixed-step-rk4")),
    "propagation.n_trajectories": _i(500, low=1),
    "propagation.record_interval": _f(0.1, low=0.0, exclusive_low=True),
    "lock.duration": _f(15.0, low=0.0),
    "lock.amplitude": _f(2000.0, low=0.0, exclusive_low=True),
    "lock.mode": _c("cw", ("cw", "waltz16", "ideal-equivalence")),
    "lock.crusher": _b(True),
    "fig3.amplitude": _f(9.9, low=0.0, exclusive_low=True),
    "fig3.tone_placement": _c("symmetric", ("symmetric", "transitions")),
    "fig3.repetitions": _i(13, low=1),
    "fig3.initial_state": _c("prepared", ("prepared", "singlet", "equilibrium")),
    "fig3.leakage": _b(True),
    "fig4a.amplitude": _f(3.2, low=0.0, exclusive_low=True),
    "fig4a.tone_placement": _c("symmetric", ("symmetric", "transitions")),
    "fig4a.offset_mode": _c("common", ("common", "probe", "antisymmetric")),
    "fig4a.offset_min": _f(-5.0),
    "fig4a.offset_max": _f(5.0),
    "fig4a.offset_step": _f(0.25, low=0.0, exclusive_low=True),
    "fig4a.repetitions": _i(1, low=1),
    "fig4b.nu0": _f(3.2, low=0.0, exclusive_low=True),
    "fig4b.tone_placement": _c("symmetric", ("symmetric", "transitions")),
    "fig4b.ratio_min": _f(0.0, low=0.0),
    "fig4b.ratio_max": _f(2.0, low=0.0),
    "fig4b.ratio_step": _f(0.05, low=0.0, exclusive_low=True),
    "fig4b.repetitions": _i(1, low=1),
    "spectra.dt": _f(1e-3, low=0.0, exclusive_low=True),
    "spectra.n_points": _i(16384, low=2),
    "spectra.zero_fill": _i(13, low=1),
    "spectra.broadening": _f(0.5, low=0.0),
    "spectra.probe_flip_deg": _f(90.0, low=0.0, exclusive_low=True),
    "spectra.probe_duration": _f(0.52, low=0.0, exclusive_low=True),
    "spectra.two_tone_duration": _f(0.24, low=0.0, exclusive_low=True),
    "spectra.two_tone_amplitude": _f(3.2, low=0.0, exclusive_low=True),
    "optimize.budget": _i(3000, low=1),
    "optimize.n_segments": _i(6, low=1),
    "optimize.amplitude": _f(3.2, low=0.0, exclusive_low=True),
    "optimize.weight_dark": _f(0.7, low=0.0, high=1.0),
    "optimize.weight_spectator": _f(0.3, low=0.0, high=1.0),
    "lifetimes.t1_span": _f(25.0, low=0.0, exclusive_low=True),
    "lifetimes.ts_span": _f(36.0, low=0.0, exclusive_low=True),
}

# Scenario-dependent defaults: deterministic single-run scenarios disable the
# stochastic noise ensemble, and the relaxation-free sweeps drop relaxation.
SCENARIO_DEFAULTS = {
    "lifetimes": {"noise.enabled": False, "propagation.n_trajectories": 1},
    "fig3b": {"noise.enabled": False, "propagation.n_trajectories": 1},
    "fig4a": {
        "relaxation.mode": "none",
        "noise.enabled": False,
        "propagation.n_trajectories": 1,
    },
    "fig4b": {
        "relaxation.mode": "none",
        "noise.enabled": False,
        "propagation.n_trajectories": 1,
    },
    "spectra": {
        "relaxation.mode": "none",
        "noise.enabled": False,
        "propagation.n_trajectories": 1,
    },
    "optimize": {
        "relaxation.mode": "none",
        "noise.enabled": False,
        "propagation.n_trajectories": 1,
    },
}


@dataclass
class ExperimentConfig:
    """Fully resolved experiment configuration (flat ``section.key`` map)."""

    values: dict = field(default_factory=dict)

    @property
    def scenario(self):
        return self.values["scenario.name"]

    @property
    def seed(self):
        return self.values["scenario.seed"]

    def get(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise UnknownKey(f"unknown config key '{key}'") from None

    def with_overrides(self, overrides):
        """New config with string-valued overrides converted and validated."""
        values = dict(self.values)
        for key, raw in overrides.items():
            spec = SCHEMA.get(key)
            if spec is None:
                raise UnknownKey(f"unknown config key '{key}'")
            values[key] = _convert(key, spec, str(raw))
        cfg = ExperimentConfig(values)
        validate_config(cfg)
        return cfg


def _convert(key, spec: KeySpec, raw):
    raw = raw.strip()
    if spec.kind == "float":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if spec.kind == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if spec.kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")
    return raw  # choice: validated against choices in validate_config


def _check_bounds(key, spec: KeySpec, value):
    if spec.kind == "choice":
        if value not in spec.choices:
            raise ConfigError(
                f"{key}: {value!r} not one of {', '.join(spec.choices)}"
            )
        return
    if spec.kind == "bool":
        return
    if spec.exclusive_low:
        if not value > spec.low:
            raise ConfigError(f"{key}: {value} must be > {spec.low}")
    elif value < spec.low:
        raise ConfigError(f"{key}: {value} must be >= {spec.low}")
    if value > spec.high:
        raise ConfigError(f"{key}: {value} must be <= {spec.high}")


def validate_config(cfg: ExperimentConfig):
    """Bounds/choice validation for every key; errors name the key."""
    for key, value in cfg.values.items():
        spec = SCHEMA.get(key)
        if spec is None:
            raise UnknownKey(f"unknown config key '{key}'")
        _check_bounds(key, spec, value)
    if "scenario.name" not in cfg.values:
        raise ParseError("missing required key 'scenario.name'")


def default_config(scenario, overrides=None):
    """Fully resolved defaults for a scenario, optionally overridden.

    ``overrides`` maps ``section.key`` to already-typed or string values.
    """
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"scenario.name: {scenario!r} not one of {', '.join(SCENARIOS)}"
        )
    values = {k: spec.default for k, spec in SCHEMA.items()}
    values["scenario.name"] = scenario
    values.update(SCENARIO_DEFAULTS.get(scenario, {}))
    cfg = ExperimentConfig(values)
    if overrides:
        cfg = cfg.with_overrides(
            {k: str(v).lower() if isinstance(v, bool) else str(v)
             for k, v in overrides.items()}
        )
    validate_config(cfg)
    return cfg


def parse_config(text):
    """Parse sectioned key=value text into a fully resolved config.

    Raises
    ------
    ParseError
        Malformed line, missing section, or missing 'scenario.name';
        carries the 1-based line number where applicable.
    UnknownKey
        Key not present in the schema.
    ConfigError
        Value of the wrong type or out of bounds.
    """
    seen = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            if not section:
                raise ParseError("empty section name", line=lineno)
            continue
        if "=" not in stripped:
            raise ParseError(f"expected 'key = value', got {stripped!r}", line=lineno)
        if section is None:
            raise ParseError("key before any [section] header", line=lineno)
        name, raw = stripped.split("=", 1)
        key = f"{section}.{name.strip()}"
        spec = SCHEMA.get(key)
        if spec is None:
            raise UnknownKey(f"unknown config key '{key}' (line {lineno})")
        seen[key] = _convert(key, spec, raw)
    if "scenario.name" not in seen:
        raise ParseError("missing required key 'scenario.name'")
    scenario = seen["scenario.name"]
    _check_bounds("scenario.name", SCHEMA["scenario.name"], scenario)
    values = {k: spec.default for k, spec in SCHEMA.items()}
    values.update(SCENARIO_DEFAULTS.get(scenario, {}))
    values.update(seen)
    cfg = ExperimentConfig(values)
    validate_config(cfg)
    return cfg


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(cfg: ExperimentConfig):
    """Render a config as sectioned key=value text (parse round-trips)."""
    sections = {}
    for key in SCHEMA:
        section, name = key.split(".", 1)
        sections.setdefault(section, []).append((name, cfg.values[key]))
    out = []
    for section, entries in sections.items():
        out.append(f"[{section}]")
        for name, value in entries:
            out.append(f"{name} = {_format_value(value)}")
        out.append("")
    return "\n".join(out)
