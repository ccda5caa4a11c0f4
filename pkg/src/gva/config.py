"""Flat key-value experiment configuration with strict per-kind schemas.

The format is hand-editable text: one `key = value` per line, `#` comments,
blank lines ignored. Values are typed: booleans (true/false), integers,
reals, double-quoted-free strings, and JSON-style numeric arrays. Every
experiment kind declares its full key set; unknown keys and type mismatches
are rejected before any computation.

Serialization is canonical (sorted keys, repr floats), so parse ->
serialize -> parse is the identity and identical configs produce identical
bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConfigError

KINDS = (
    "verify-dt-ema", "verify-cliff", "verify-ou", "verify-driftless",
    "verify-amplification", "mean-cliff", "lqr-marginal", "lqr-cliff",
    "bench-averaging",
)


@dataclass(frozen=True)
class Key:
    type: str  # bool | int | real | str | array
    default: object
    choices: tuple | None = None


COMMON_KEYS = {
    "seed": Key("int", 0),
    "out": Key("str", ""),
}

SCHEMAS = {
    "verify-dt-ema": {
        "etas": Key("array", [0.3, 0.1]),
        "gammas": Key("array", [0.01, 0.05, 0.2]),
        "sigma": Key("real", 1.0),
        "b": Key("real", 1.0),
        "trials": Key("int", 100000),
    },
    "verify-cliff": {
        "C": Key("real", 100.0),
        "eps": Key("real", 0.5),
        "eta": Key("real", 0.3),
        "gamma": Key("real", 0.005),
        "sigma": Key("real", 2.0),
        "T": Key("int", 5000),
        "theta0": Key("real", 0.0),
        "trials": Key("int", 10000),
    },
    "verify-ou": {
        "a": Key("real", 1.0),
        "gamma": Key("real", 0.1),
        "theta0": Key("real", 1.0),
        "mu": Key("real", 0.0),
        "t_end": Key("real", 5.0),
        "dt": Key("real", 1e-3),
        "trials": Key("int", 100000),
        "gamma_grid": Key("array", []),
        "grid_trials": Key("int", 20000),
        "cliff_eps": Key("real", 0.5),
    },
    "verify-driftless": {
        "eta": Key("real", 1.0),
        "gamma": Key("real", 1.0),
        "t_end": Key("real", 10.0),
        "dt": Key("real", 1e-3),
        "trials": Key("int", 100000),
    },
    "verify-amplification": {
        "d": Key("int", 1),
        "eps": Key("real", 0.01),
        "c": Key("real", 1.0),
        "H": Key("int", 500),
        "eps_primes": Key("array", [-0.005, 0.01, 0.02, 0.03]),
    },
    "mean-cliff": {
        "d": Key("int", 1),
        "C": Key("real", 100.0),
        "eps": Key("real", 0.5),
        "eta": Key("real", 0.3),
        "gamma": Key("real", 0.005),
        "sigma": Key("real", 2.0),
        "T": Key("int", 5000),
        "theta0": Key("real", 0.0),
        "trials": Key("int", 10000),
        "burn_in": Key("int", 0),
        "update_period": Key("int", 1),
        "n_checkpoints": Key("int", 25),
    },
    "lqr-marginal": {
        "imitator": Key("str", "linear", choices=("linear", "mlp")),
        "hidden": Key("int", 32),
        "alpha": Key("real", 2.5),
        "H": Key("int", 1000),
        "sigma_w": Key("real", 1e-3),
        "N": Key("int", 900),
        "epochs": Key("int", 3),
        "batch": Key("int", 32),
        "lr": Key("real", 3e-4),
        "warmup": Key("int", 50),
        "weight_decay": Key("real", 0.0),
        "eval_every": Key("int", 2000),
        "eval_seeds": Key("int", 20),
        "seeds": Key("int", 3),
        "ema_alpha": Key("real", 0.67),
        "ema_gamma_min": Key("real", 1e-4),
    },
    "lqr-cliff": {
        "eta_time": Key("real", 0.1),
        "kappa": Key("real", -0.05),
        "H": Key("int", 1000),
        "sigma_w": Key("real", 0.0),
        "N": Key("int", 60),
        "epochs": Key("int", 3),
        "batch": Key("int", 8),
        "lr": Key("real", 0.3),
        "eval_every": Key("int", 100),
        "eval_seeds": Key("int", 20),
        "seeds": Key("int", 3),
        "ema_alpha": Key("real", 0.67),
        "ema_gamma_min": Key("real", 1e-4),
        "ema_burn_in": Key("int", 20),
        "init_lo_deg": Key("real", -85.5),
        "init_hi_deg": Key("real", -40.0),
    },
    "bench-averaging": {
        "T": Key("int", 200),
        "trials": Key("int", 100),
        "eta": Key("real", 0.1),
        "sigma": Key("real", 1.0),
        "gamma": Key("real", 0.1),
        "suffix_alpha": Key("real", 0.5),
    },
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    out: str
    params: dict

    def __getitem__(self, key):
        return self.params[key]


def _coerce(kind: str, key: str, raw: str, spec: Key):
    where = f"{kind}.{key}"
    if spec.type == "bool":
        if raw in ("true", "false"):
            return raw == "true"
        raise ConfigError(f"{where}: expected true/false, got {raw!r}")
    if spec.type == "int":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {raw!r}") from None
    if spec.type == "real":
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected a real, got {raw!r}") from None
    if spec.type == "array":
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            raise ConfigError(f"{where}: expected a JSON array, got {raw!r}") from None
        if not isinstance(value, list) or not _numeric_nested(value):
            raise ConfigError(f"{where}: expected a numeric array, got {raw!r}")
        return value
    if spec.choices is not None and raw not in spec.choices:
        raise ConfigError(f"{where}: expected one of {spec.choices}, got {raw!r}")
    return raw


def _numeric_nested(value) -> bool:
    if isinstance(value, list):
        return all(_numeric_nested(v) for v in value)
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def parse_config(text: str) -> ExperimentConfig:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if not key or not raw:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = raw
    if "kind" not in pairs:
        raise ConfigError("config must declare a kind")
    kind = pairs.pop("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; known: {', '.join(KINDS)}")
    schema = {**COMMON_KEYS, **SCHEMAS[kind]}
    unknown = sorted(set(pairs) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {kind}: {', '.join(unknown)}")
    values = {}
    for key, spec in schema.items():
        if key in pairs:
            values[key] = _coerce(kind, key, pairs[key], spec)
        else:
            values[key] = spec.default
    seed = values.pop("seed")
    out = values.pop("out")
    return ExperimentConfig(kind=kind, seed=seed, out=out, params=values)


def parse_config_file(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return json.dumps(list(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: ExperimentConfig) -> str:
    lines = [f"kind = {config.kind}", f"seed = {config.seed}"]
    if config.out:
        lines.append(f"out = {config.out}")
    for key in sorted(config.params):
        lines.append(f"{key} = {_format_value(config.params[key])}")
    return "\n".join(lines) + "\n"


def preset_text(name: str) -> str:
    """Load a named preset shipped with the package."""
    from importlib import resources
    res = resources.files("gva").joinpath("presets", f"{name}.cfg")
    if not res.is_file():
        available = sorted(
            p.name[:-4] for p in resources.files("gva").joinpath("presets").iterdir()
            if p.name.endswith(".cfg")
        )
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(available)}")
    return res.read_text(encoding="utf-8")
