"""Experiment presets, flat JSON configuration and run manifests.

A configuration is a flat mapping of known keys. Values resolve in the
order preset, then config file, then command-line overrides.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Mapping

from . import __version__
from .dynamics import ModelParams
from .errors import ConfigError
from .graph import build_operators, generate_network, parse_kernel
from .jumps import JumpParams

SCHEMA_VERSION = 1

DEFAULTS: dict[str, Any] = {
    "network": "random",
    "n": 30,
    "p": 0.15,
    "m": 2,
    "k": 4,
    "network_seed": 0,
    "spatial_kernel": "knn:4",
    "nu_s": 0.5,
    "nu_n": 0.8,
    "lambda_x": 0.3,
    "kappa": 0.15,
    "dt": 0.01,
    "t_end": 50.0,
    "lambda0": 0.05,
    "lambda1": 10.0,
    "tau_star": 0.35,
    "jump_target": "uniform_neighbor",
    "absorb_level": 0.95,
    "absorbing": True,
    "node_count": 18,
    "small_node_count": 5,
    "intensity": 0.5,
    "duration": 4.0,
    "durations": [1.0, 2.0, 4.0, 7.0],
    "seeds": 50,
    "fk_t": 10.0,
    "fk_paths": 4000,
    "fk_nodes": 10,
    "experiment": "duration",
}

# Jump rates, shock intensity, horizon and generator settings are
# calibrated so the shock and duration experiments separate the regimes.
PRESETS: dict[str, dict[str, Any]] = {
    "baseline": {"experiment": "duration"},
    "fig1": {
        "nu_s": 0.8, "nu_n": 1.2, "lambda_x": 0.4, "kappa": 0.1, "tau_star": 0.35, "n": 30,
        "intensity": 0.4, "duration": 5.0, "node_count": 18, "small_node_count": 5,
        "experiment": "shock",
    },
    "fig2": {"experiment": "duration"},
    "fig3": {
        "nu_s": 0.8, "nu_n": 1.2, "lambda_x": 0.4, "kappa": 0.1, "n": 40,
        "experiment": "validation",
    },
    "table2": {
        "nu_s": 0.8, "nu_n": 1.2, "lambda_x": 0.4, "kappa": 0.1, "n": 40,
        "network": "scale_free", "experiment": "decomposition",
    },
}

_INT_KEYS = {"n", "m", "k", "network_seed", "node_count", "small_node_count", "seeds", "fk_paths", "fk_nodes"}
_STR_KEYS = {"network", "spatial_kernel", "jump_target", "experiment"}
_EXPERIMENTS = ("shock", "duration", "validation", "decomposition")


def preset(name: str) -> dict[str, Any]:
    """Full configuration for a named preset."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    cfg = dict(DEFAULTS)
    cfg.update(PRESETS[name])
    cfg["preset"] = name
    return cfg


def _coerce(key, value):
    if key == "preset":
        return str(value)
    if key not in DEFAULTS:
        raise ConfigError(f"unknown configuration key {key!r}")
    try:
        if key in _STR_KEYS:
            return str(value)
        if key == "absorbing":
            if isinstance(value, str):
                if value.lower() not in ("true", "false", "1", "0"):
                    raise ValueError(value)
                return value.lower() in ("true", "1")
            return bool(value)
        if key == "durations":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            return [float(v) for v in value]
        if key in _INT_KEYS:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key!r}: {value!r}") from None


def load_config_file(path) -> tuple[dict[str, Any], int | None]:
    """Read a flat JSON config, or the config and seed stored in a run manifest."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    seed = None
    if "schema_version" in data and "config" in data:
        seed = data.get("seed")
        data = data["config"]
    return data, seed


def resolve(preset_name: str | None = None, file_cfg: Mapping | None = None,
            overrides: Mapping | None = None) -> dict[str, Any]:
    file_cfg = dict(file_cfg or {})
    name = preset_name or file_cfg.get("preset") or "baseline"
    cfg = preset(name)
    for source in (file_cfg, overrides or {}):
        for key, value in source.items():
            if value is None:
                continue
            cfg[key] = _coerce(key, value)
    validate(cfg)
    return cfg


def validate(cfg: Mapping) -> None:
    if cfg["experiment"] not in _EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {_EXPERIMENTS}")
    parse_kernel(cfg["spatial_kernel"])
    model_params(cfg)
    jump_params(cfg)
    if cfg["seeds"] < 1:
        raise ConfigError("seeds must be >= 1")
    if not 0 <= cfg["node_count"] <= cfg["n"] or not 0 <= cfg["small_node_count"] <= cfg["n"]:
        raise ConfigError("node counts must lie in 0..n")


def model_params(cfg: Mapping) -> ModelParams:
    return ModelParams(cfg["nu_s"], cfg["nu_n"], cfg["lambda_x"], cfg["kappa"], cfg["dt"], cfg["t_end"])


def jump_params(cfg: Mapping) -> JumpParams:
    return JumpParams(cfg["lambda0"], cfg["lambda1"], cfg["tau_star"], cfg["jump_target"],
                      cfg["absorb_level"], bool(cfg["absorbing"]))


def network(cfg: Mapping):
    kind = cfg["network"]
    params = {"random": {"p": cfg["p"]}, "scale_free": {"m": cfg["m"]}, "clustered": {"k": cfg["k"]}}.get(kind)
    if params is None:
        raise ConfigError(f"unknown network kind {kind!r}")
    net = generate_network(kind, cfg["n"], params, cfg["network_seed"], cfg["spatial_kernel"])
    return net, build_operators(net)


def config_hash(cfg: Mapping) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def manifest(command: str, cfg: Mapping, seed: int, outputs, backend: str, extra: Mapping | None = None) -> dict:
    """Everything needed to rerun: config, seed and versions (no timestamps)."""
    doc = {
        "tool": "adoptnet",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": int(seed),
        "config_hash": config_hash(cfg),
        "config": dict(cfg),
        "backend": backend,
        "outputs": sorted(str(Path(o).name) for o in outputs),
    }
    if extra:
        doc.update(extra)
    return doc
