"""Run configuration: a single JSON document with defaults filled in at load."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import FourierGrid
from .model import CouplingProfile, PolynomialPotential


class ConfigError(ValueError):
    pass


EXPERIMENTS = ("sigma", "atlas", "evolve", "attract", "selftest")

_INITIAL = {"kind": "perturbedSolitary", "params": {"omega": 0.2, "delta": 0.2}}

EXPERIMENT_DEFAULTS = {
    "sigma": {"omegaMin": -1.0, "omegaMax": 1.0, "omegaCount": 201, "lambdaProbes": [0.5, 1.0, 2.0]},
    "atlas": {"omegaMin": -0.9, "omegaMax": 0.9, "omegaCount": 37, "residuals": True},
    "evolve": {"engine": "spectral", "initial": _INITIAL, "freeFlow": False, "snapshotTimes": []},
    "attract": {
        "initial": _INITIAL,
        "distTimes": [0.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0],
        "windows": [[0.0, 10.0], [10.0, 20.0], [20.0, 30.0], [30.0, 40.0], [40.0, 50.0]],
        "atlasOmegaMin": -0.95,
        "atlasOmegaMax": 0.95,
        "atlasOmegaCount": 39,
        "epsilon": 0.5,
        "gapDelta": 0.1,
    },
    "selftest": {"orderGrid": [32, 16.0], "orderT": 2.0, "orderDt": 0.04},
}

DEFAULTS = {
    "model": {
        "m": 1.0,
        "potential": [0.0, 1.0],
        "coupling": [{"amplitude": float(np.pi ** -0.75), "width": 1.0, "direction": [1.0, 0.0, 0.0, 0.0]}],
    },
    "grid": {"N": 64, "L": 32.0},
    "time": {"dt": 0.01, "T": 20.0, "diagStride": 10},
    "experiment": {"name": "evolve", "params": {}},
    "seed": 1,
    "output": "out",
    "tolerances": {"sigma": 1e-10, "root": 1e-12, "kernel": 1e-10, "volterra": 1e-12, "engineGap": 5e-3},
}

_T_DEFAULT = {"attract": 50.0}


# blocks merged key by key; any other value is replaced whole
_BLOCKS = {"model", "grid", "time", "experiment", "params", "tolerances"}


def _merge(defaults: dict, given: dict, where: str) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if k not in defaults:
            raise ConfigError(f"unknown key {where}{k!r}")
        if k in _BLOCKS:
            if not isinstance(v, dict):
                raise ConfigError(f"{where}{k!r} must be an object")
            out[k] = _merge(defaults[k], v, f"{where}{k}.")
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunConfig:
    data: dict

    # access -------------------------------------------------------------
    @property
    def name(self) -> str:
        return self.data["experiment"]["name"]

    @property
    def params(self) -> dict:
        return self.data["experiment"]["params"]

    @property
    def m(self) -> float:
        return float(self.data["model"]["m"])

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def tol(self) -> dict:
        return self.data["tolerances"]

    @property
    def time(self) -> dict:
        return self.data["time"]

    def potential(self) -> PolynomialPotential:
        return PolynomialPotential(tuple(self.data["model"]["potential"]))

    def coupling(self) -> CouplingProfile:
        return CouplingProfile.from_dict(self.data["model"]["coupling"], self.m)

    def grid(self) -> FourierGrid:
        g = self.data["grid"]
        return FourierGrid(int(g["N"]), float(g["L"]))

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def dumps(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps())
        return path

    def with_overrides(self, seed: int | None = None, output: str | None = None,
                       engine: str | None = None) -> "RunConfig":
        d = self.to_dict()
        if seed is not None:
            d["seed"] = int(seed)
        if output is not None:
            d["output"] = str(output)
        if engine is not None:
            if d["experiment"]["name"] != "evolve":
                raise ConfigError("--engine applies to the evolve experiment only")
            d["experiment"]["params"]["engine"] = engine
        return normalize(d)


def normalize(raw: dict, name: str | None = None) -> RunConfig:
    """Fill defaults, reject unknown keys and enforce the model invariants."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    raw = copy.deepcopy(raw)
    exp = raw.get("experiment", {})
    if not isinstance(exp, dict):
        raise ConfigError("'experiment' must be an object")
    given_name = exp.get("name")
    if name is not None and given_name is not None and given_name != name:
        raise ConfigError(f"config is for experiment {given_name!r}, not {name!r}")
    ename = name or given_name or DEFAULTS["experiment"]["name"]
    if ename not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {ename!r}")
    defaults = copy.deepcopy(DEFAULTS)
    defaults["experiment"] = {"name": ename, "params": EXPERIMENT_DEFAULTS[ename]}
    if ename in _T_DEFAULT:
        defaults["time"]["T"] = _T_DEFAULT[ename]
    exp = dict(exp)
    exp["name"] = ename
    raw["experiment"] = exp
    data = _merge(defaults, raw, "")
    cfg = RunConfig(data)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    d = cfg.data
    try:
        m = float(d["model"]["m"])
        if not m > 0:
            raise ConfigError("mass must be positive")
        cfg.potential()
        cfg.coupling()
        grid = cfg.grid()
        # warns below the spectral resolution rule of thumb
        grid.check_resolution(m)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    t = d["time"]
    if not (float(t["dt"]) > 0 and float(t["T"]) >= 0 and int(t["diagStride"]) >= 1):
        raise ConfigError("need dt > 0, T >= 0 and diagStride >= 1")
    if not isinstance(d["seed"], int) or isinstance(d["seed"], bool) or d["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    p = cfg.params
    if cfg.name == "evolve" and p["engine"] not in ("spectral", "volterra", "both"):
        raise ConfigError(f"unknown engine {p['engine']!r}")
    if cfg.name in ("sigma", "atlas") and int(p["omegaCount"]) < 0:
        raise ConfigError("omegaCount must be non-negative")
    for k, v in d["tolerances"].items():
        if not float(v) > 0:
            raise ConfigError(f"tolerance {k!r} must be positive")


def load(path, name: str | None = None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return normalize(raw, name)


def default(name: str = "evolve", **overrides) -> RunConfig:
    return normalize({"experiment": {"name": name}, **overrides})


def omega_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """Evenly spaced grid rounded to 12 digits so files are stable across platforms."""
    if count <= 0:
        return np.empty(0)
    if count == 1:
        return np.array([round(float(lo), 12)])
    return np.round(np.linspace(lo, hi, int(count)), 12)
