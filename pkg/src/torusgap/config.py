"""Experiment configuration: YAML schema, validation, canonical hashing.

The schema is a small nested mapping; validation reports dotted field
paths so config errors point at the offending line of the file.  The
canonical hash is taken over the fully resolved configuration (defaults
applied), so two files meaning the same experiment share a hash and
reproduce byte-identical trajectory CSVs.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field as dc_field

import yaml

from .errors import ConfigError
from .fields import Grid, SpectralField, random_divfree, single_mode, taylor_green
from .solver import SolverConfig

__all__ = ["ExperimentConfig", "load_config", "parse_config", "config_hash", "initial_condition"]

IC_KINDS = ("taylor_green", "random", "single_mode")
FUNCTIONALS = ("G", "H", "P", "E")

_SOLVER_DEFAULTS = {
    "dealias": True,
    "sample_every": 1,
    "integrator": "imex-rk2",
    "advection": True,
    "mollifier_profile": "sharp",
    "snapshot_every": None,
}

_ANALYSIS_DEFAULTS = {
    "functionals": ["G", "H", "P", "E"],
    "weight": {"kind": "reciprocal", "K": 1.0},
    "beta_ladder": [0.2, 0.1, 0.05, 0.025],
    "alpha": 1.0,
    "alpha_ladder": [0.5, 1.0, 2.0, 8.0],
    "r_factors": [2.0, 4.0, 8.0, 16.0],
    "r_values": None,
    "cutoff_shape": "linear",
    "extrapolation": "richardson",
}


def _need(mapping: dict, path: str, key: str, types, choices=None):
    if key not in mapping:
        raise ConfigError(f"{path}.{key}: missing required field")
    val = mapping[key]
    if not isinstance(val, types):
        tnames = types[0].__name__ if isinstance(types, tuple) else types.__name__
        raise ConfigError(f"{path}.{key}: expected {tnames}, got {type(val).__name__}")
    if choices is not None and val not in choices:
        raise ConfigError(f"{path}.{key}: must be one of {list(choices)}, got {val!r}")
    return val


def _optional(mapping: dict, key: str, default):
    return mapping.get(key, default)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    initial_condition: dict
    solver: dict
    analysis: dict
    sweep: dict = dc_field(default_factory=dict)

    def solver_config(self, m: int | None = None) -> SolverConfig:
        s = self.solver
        grid = Grid(dim=s["dim"], n=s["n"])
        return SolverConfig(
            grid=grid,
            m=int(m if m is not None else s["m"]),
            dt=s["dt"],
            T=s["T"],
            dealias=s["dealias"],
            sample_every=s["sample_every"],
            integrator=s["integrator"],
            advection=s["advection"],
            mollifier_profile=s["mollifier_profile"],
            snapshot_every=s["snapshot_every"],
        )

    def resolved(self) -> dict:
        return {
            "name": self.name,
            "initial_condition": self.initial_condition,
            "solver": self.solver,
            "analysis": self.analysis,
            "sweep": self.sweep,
        }


def parse_config(raw: dict, path_hint: str = "config") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path_hint}: top level must be a mapping")
    name = raw.get("name", "experiment")
    if not isinstance(name, str):
        raise ConfigError("name: expected str")

    ic_raw = _need(raw, path_hint, "initial_condition", dict)
    kind = _need(ic_raw, "initial_condition", "kind", str, IC_KINDS)
    ic = {"kind": kind, "amplitude": float(_optional(ic_raw, "amplitude", 1.0))}
    if kind == "random":
        ic["seed"] = int(_need(ic_raw, "initial_condition", "seed", int))
        ic["spectrum_slope"] = float(_optional(ic_raw, "spectrum_slope", -3.0))
        k_cut = _optional(ic_raw, "k_cut", None)
        ic["k_cut"] = None if k_cut is None else int(k_cut)
    elif kind == "single_mode":
        mode = _need(ic_raw, "initial_condition", "mode", list)
        ic["mode"] = [int(x) for x in mode]

    s_raw = _need(raw, path_hint, "solver", dict)
    if kind == "single_mode" and "dim" in s_raw and len(ic["mode"]) != s_raw["dim"]:
        raise ConfigError("initial_condition.mode: length must equal solver.dim")
    solver = {
        "dim": _need(s_raw, "solver", "dim", int, (2, 3)),
        "n": _need(s_raw, "solver", "n", int),
        "m": _need(s_raw, "solver", "m", int),
        "dt": float(_need(s_raw, "solver", "dt", (int, float))),
        "T": float(_need(s_raw, "solver", "T", (int, float))),
    }
    for key, default in _SOLVER_DEFAULTS.items():
        solver[key] = _optional(s_raw, key, default)
    if solver["snapshot_every"] is not None:
        solver["snapshot_every"] = int(solver["snapshot_every"])

    a_raw = _optional(raw, "analysis", {})
    if not isinstance(a_raw, dict):
        raise ConfigError("analysis: expected mapping")
    analysis = dict(_ANALYSIS_DEFAULTS)
    analysis["s"] = float(_optional(a_raw, "s", 0.0))
    analysis["t"] = float(_optional(a_raw, "t", solver["T"]))
    for key in _ANALYSIS_DEFAULTS:
        analysis[key] = _optional(a_raw, key, analysis[key])
    for f in analysis["functionals"]:
        if f not in FUNCTIONALS:
            raise ConfigError(f"analysis.functionals: unknown functional {f!r}")

    sweep_raw = _optional(raw, "sweep", {})
    if not isinstance(sweep_raw, dict):
        raise ConfigError("sweep: expected mapping")
    sweep = {}
    if sweep_raw:
        ms = _need(sweep_raw, "sweep", "m", list)
        if not ms:
            raise ConfigError("sweep.m: ladder must not be empty")
        sweep["m"] = [int(x) for x in ms]

    cfg = ExperimentConfig(name=name, initial_condition=ic, solver=solver,
                           analysis=analysis, sweep=sweep)
    cfg.solver_config()  # surface SolverConfig invariant violations as config errors
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: YAML parse error: {exc}")
    try:
        return parse_config(raw or {}, path_hint="config")
    except ValueError as exc:  # SolverConfig invariants
        raise ConfigError(str(exc))


def config_hash(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(cfg.resolved(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def initial_condition(cfg: ExperimentConfig, grid: Grid, seed_override: int | None = None) -> SpectralField:
    ic = cfg.initial_condition
    kind = ic["kind"]
    if kind == "taylor_green":
        return taylor_green(grid, amplitude=ic["amplitude"])
    if kind == "random":
        seed = int(seed_override) if seed_override is not None else ic["seed"]
        return random_divfree(grid, spectrum_slope=ic["spectrum_slope"], seed=seed,
                              amplitude=ic["amplitude"], k_cut=ic["k_cut"])
    if kind == "single_mode":
        return single_mode(grid, ic["mode"], amplitude=ic["amplitude"])
    raise ConfigError(f"initial_condition.kind: unknown kind {kind!r}")
