"""Run configuration: a flat key/value document, validated into :class:`RunConfig`.

Keys (JSON object, UTF-8)::

    mode        simulate | limit | sweep-a | sweep-eps | ensemble | figures | fbm-test
    x0, sigma, hurst, t_max, dt         numbers
    a           number, or list of numbers for sweep-a / figures
    epsilon     number (finest regularization), or list for sweep-eps
    eps_ratio, eps_levels, tol_limit    regularization schedule
    seed, paths, out                    master seed, ensemble size, output dir
    zero_noise  true replaces the fBm sample by zeros (drift-only check)
    gate_*      pilot gate overrides (see PILOT_GATES)

Command-line flags use the same names with dashes and override file values.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, FracBesselError
from .fbm import TimeGrid
from .limit import EpsilonSchedule
from .sde import SdeParams

MODES = ("simulate", "limit", "sweep-a", "sweep-eps", "ensemble", "figures", "fbm-test")

# Frozen from pilot ensembles (master seed 2024, 500 paths, dt = 1e-4); these
# are calibration values, not results from the literature.
PILOT_GATES = {
    "gate_zero_hit_large_a": 0.05,
    "gate_sqrt_ratio_fraction": 0.95,
    "gate_final_quarter_positive": 0.90,
    "gate_zero_hit_small_a": 0.5,
}

_DEFAULT_DT = {"figures": 1e-6, "simulate": 1e-6, "limit": 1e-6, "sweep-a": 1e-6,
               "sweep-eps": 1e-6, "ensemble": 1e-4, "fbm-test": 1 / 512}
_DEFAULT_A = {"sweep-a": (10.0, 1.0, 0.01), "figures": (1.0, 10.0, 0.01)}
_DEFAULT_EPS = {"sweep-eps": (1e-2, 1e-3, 1e-4)}
_DEFAULT_PATHS = {"ensemble": 500, "fbm-test": 20_000}

_NUMBER = ("x0", "sigma", "hurst", "t_max", "dt", "eps_ratio", "tol_limit")
_INTEGER = ("eps_levels", "seed", "paths")
KEYS = ("mode", "x0", "a", "sigma", "hurst", "t_max", "dt", "epsilon", "eps_ratio",
        "eps_levels", "tol_limit", "seed", "paths", "out", "zero_noise", *PILOT_GATES)


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: SdeParams
    grid: TimeGrid
    schedule: EpsilonSchedule
    a_values: tuple
    eps_values: tuple
    master_seed: int = 0
    n_paths: int = 0
    output_dir: Path = Path("out")
    gates: dict = field(default_factory=lambda: dict(PILOT_GATES))
    zero_noise: bool = False

    def to_flat(self):
        """Flat dictionary that :func:`parse_config` maps back to this config."""
        def scalar_or_list(values):
            return values[0] if len(values) == 1 else list(values)

        flat = {
            "mode": self.mode,
            "x0": self.params.x0,
            "a": scalar_or_list(self.a_values),
            "sigma": self.params.sigma,
            "hurst": self.params.hurst,
            "t_max": self.grid.horizon,
            "dt": self.grid.dt,
            "epsilon": scalar_or_list(self.eps_values),
            "eps_ratio": self.schedule.ratio,
            "eps_levels": self.schedule.max_levels,
            "tol_limit": self.schedule.tol_limit,
            "seed": self.master_seed,
            "paths": self.n_paths,
            "out": str(self.output_dir),
            "zero_noise": self.zero_noise,
        }
        flat.update(self.gates)
        return flat

    def dumps(self):
        return json.dumps(self.to_flat(), indent=2)


def _number(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    return value


def _integer(key, value):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return value


def _numbers(key, value):
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError(key, "list must not be empty")
        return tuple(_number(key, v) for v in value)
    return (_number(key, value),)


def load_config_file(path):
    """Read a flat JSON object from ``path``."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be an object")
    return data


def parse_config(source=None, overrides=None):
    """Validate a flat key/value source into a :class:`RunConfig`.

    ``source`` is a mapping or a path to a JSON file; ``overrides`` (e.g.
    parsed flags) win over it. Missing keys take the defaults of the chosen
    mode, which give the reference numerical set-up.
    """
    if source is None:
        raw = {}
    elif isinstance(source, (str, Path)):
        raw = load_config_file(source)
    else:
        raw = dict(source)
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})

    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")

    mode = raw.get("mode", "figures")
    if mode not in MODES:
        raise ConfigError("mode", f"expected one of {', '.join(MODES)}, got {mode!r}")

    num = {k: _number(k, raw[k]) for k in _NUMBER if k in raw}
    ints = {k: _integer(k, raw[k]) for k in _INTEGER if k in raw}
    a_values = _numbers("a", raw["a"]) if "a" in raw else _DEFAULT_A.get(mode, (1.0,))
    eps_values = _numbers("epsilon", raw["epsilon"]) if "epsilon" in raw else _DEFAULT_EPS.get(mode, (1e-4,))
    if mode not in ("sweep-a", "figures") and len(a_values) > 1:
        raise ConfigError("a", f"mode {mode} takes a single value")
    if mode == "figures" and len(a_values) != 3:
        raise ConfigError("a", "figures mode takes three values: main, large and small drift")
    if mode != "sweep-eps" and len(eps_values) > 1:
        raise ConfigError("epsilon", f"mode {mode} takes a single value")

    t_max = num.get("t_max", 1.0)
    dt = num.get("dt", _DEFAULT_DT[mode])
    if t_max <= 0:
        raise ConfigError("t_max", "must be positive")
    if dt <= 0:
        raise ConfigError("dt", "must be positive")
    if dt > t_max:
        raise ConfigError("dt", f"step {dt} is larger than the horizon {t_max}")
    try:
        grid = TimeGrid.from_step(t_max, dt)
    except FracBesselError as exc:
        raise ConfigError("dt", str(exc)) from exc

    if not 0 < num.get("hurst", 0.25) < 1:
        raise ConfigError("hurst", f"must lie in (0, 1), got {num['hurst']}")
    try:
        params = SdeParams(
            x0=num.get("x0", 1.0),
            a=a_values[0],
            sigma=num.get("sigma", 1.0),
            hurst=num.get("hurst", 0.25),
            epsilon=min(eps_values),
        )
    except FracBesselError as exc:
        field_name = str(exc).split()[0]
        raise ConfigError(field_name if field_name in KEYS else "params", str(exc)) from exc
    if mode in ("limit", "figures", "sweep-a") and params.hurst > 0.5:
        raise ConfigError("hurst", "the limit construction needs H <= 1/2")
    if any(e <= 0 for e in eps_values):
        raise ConfigError("epsilon", "must be positive")
    if mode == "sweep-a" and any(x <= y for x, y in zip(a_values, a_values[1:])):
        raise ConfigError("a", "sweep values must be strictly decreasing")
    if mode == "sweep-eps" and any(x <= y for x, y in zip(eps_values, eps_values[1:])):
        raise ConfigError("epsilon", "sweep values must be strictly decreasing")

    try:
        schedule = EpsilonSchedule.ending_at(
            params.epsilon,
            ratio=num.get("eps_ratio", 0.5),
            levels=ints.get("eps_levels", 7),
            tol_limit=num.get("tol_limit", 1e-2),
        )
    except FracBesselError as exc:
        raise ConfigError("eps_ratio" if "ratio" in str(exc) else "eps_levels", str(exc)) from exc

    n_paths = ints.get("paths", _DEFAULT_PATHS.get(mode, 0))
    if mode in ("ensemble", "fbm-test") and n_paths < 100:
        raise ConfigError("paths", "at least 100 paths are required")
    seed = ints.get("seed", 0)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must be a 64-bit unsigned integer")
    gates = dict(PILOT_GATES)
    for key in PILOT_GATES:
        if key in raw:
            gates[key] = _number(key, raw[key])
    out = raw.get("out", "out")
    if not isinstance(out, str):
        raise ConfigError("out", "must be a path string")

    zero_noise = raw.get("zero_noise", False)
    if not isinstance(zero_noise, bool):
        raise ConfigError("zero_noise", f"expected true or false, got {zero_noise!r}")
    if zero_noise and mode in ("ensemble", "fbm-test"):
        raise ConfigError("zero_noise", f"mode {mode} needs random samples")

    return RunConfig(mode, params, grid, schedule, a_values, eps_values,
                     seed, n_paths, Path(out), gates, zero_noise)
