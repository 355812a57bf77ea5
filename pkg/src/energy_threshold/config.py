"""Experiment configuration documents and built-in presets."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .clamp import Tolerances
from .models import ModelSpec, model_from_dict, model_to_dict


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    num: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"grid spacing must be 'linear' or 'log', got {self.spacing!r}")
        if self.num < 2:
            raise ConfigError("a grid needs at least 2 points")
        if not self.stop > self.start:
            raise ConfigError(f"grid stop must exceed start ({self.start} .. {self.stop})")
        if self.spacing == "log" and self.start <= 0:
            raise ConfigError("log-spaced grids need a positive start")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.num)
        return np.linspace(self.start, self.stop, self.num)

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.start, self.stop, factor * (self.num - 1) + 1, self.spacing)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: ModelSpec
    A_grid: GridSpec
    alpha_grid: GridSpec
    ansatz: str = "exponential"
    B_grid: GridSpec | None = None
    beta_grid: GridSpec | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_dir: str = "results"
    workers: int = 1
    verify_events: bool = False

    def __post_init__(self):
        if self.ansatz not in ("exponential", "biexponential"):
            raise ConfigError(f"ansatz must be 'exponential' or 'biexponential', got {self.ansatz!r}")
        if self.ansatz == "biexponential" and (self.B_grid is None or self.beta_grid is None):
            raise ConfigError("the biexponential ansatz needs B_grid and beta_grid")
        if self.A_grid.start < 0:
            raise ConfigError("amplitudes must be nonnegative")
        if self.B_grid is not None and self.B_grid.start < 0:
            raise ConfigError("B must be nonnegative")
        for g in (self.alpha_grid, self.beta_grid):
            if g is not None and (g.start <= 0 or g.num < 8):
                raise ConfigError("rate grids need positive values and at least 8 points")
        if self.A_grid.num < 3:
            raise ConfigError("A_grid needs at least 3 points")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_dict(self) -> dict:
        data = {
            "name": self.name,
            "model": model_to_dict(self.model),
            "ansatz": self.ansatz,
            "A_grid": asdict(self.A_grid),
            "alpha_grid": asdict(self.alpha_grid),
            "tolerances": asdict(self.tolerances),
            "output_dir": self.output_dir,
            "workers": self.workers,
            "verify_events": self.verify_events,
        }
        if self.B_grid is not None:
            data["B_grid"] = asdict(self.B_grid)
        if self.beta_grid is not None:
            data["beta_grid"] = asdict(self.beta_grid)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {
            "name", "model", "ansatz", "A_grid", "alpha_grid", "B_grid", "beta_grid",
            "tolerances", "output_dir", "workers", "verify_events",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        missing = {"name", "model", "A_grid", "alpha_grid"} - set(data)
        if missing:
            raise ConfigError(f"missing configuration keys: {sorted(missing)}")
        try:
            kwargs = dict(data)
            kwargs["model"] = model_from_dict(data["model"])
            for key in ("A_grid", "alpha_grid", "B_grid", "beta_grid"):
                if data.get(key) is not None:
                    kwargs[key] = GridSpec(**data[key])
            if "tolerances" in data:
                kwargs["tolerances"] = Tolerances(**data["tolerances"])
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


_PRESETS: dict[str, dict] = {
    "rc-linear": {
        "name": "rc-linear",
        "model": {"kind": "linear_rc", "C": 1.0, "R": 1.0},
        "A_grid": {"start": 0.0, "stop": 2.0, "num": 41, "spacing": "linear"},
        "alpha_grid": {"start": 0.1, "stop": 1000.0, "num": 40, "spacing": "log"},
    },
    "rc-bistable": {
        "name": "rc-bistable",
        "model": {"kind": "cubic_rc", "va": 0.0, "vb": 2.0, "vc": 4.0, "k": 1.0, "C": 1.0},
        "A_grid": {"start": 0.0, "stop": 4.0, "num": 41, "spacing": "linear"},
        "alpha_grid": {"start": 0.1, "stop": 1000.0, "num": 40, "spacing": "log"},
    },
    "fhn": {
        "name": "fhn",
        "model": {"kind": "fhn", "epsilon": 0.01, "gamma": 0.5, "vb": 0.4},
        "A_grid": {"start": 0.1, "stop": 2.0, "num": 60, "spacing": "linear"},
        "alpha_grid": {"start": 1.0, "stop": 500.0, "num": 40, "spacing": "log"},
    },
    "hh-excitatory": {
        "name": "hh-excitatory",
        "model": {"kind": "hh"},
        "A_grid": {"start": 1.0, "stop": 30.0, "num": 60, "spacing": "linear"},
        "alpha_grid": {"start": 0.05, "stop": 20.0, "num": 40, "spacing": "log"},
    },
    "hh-inhibitory": {
        "name": "hh-inhibitory",
        "model": {"kind": "hh"},
        "ansatz": "biexponential",
        "A_grid": {"start": 1.0, "stop": 30.0, "num": 60, "spacing": "linear"},
        "alpha_grid": {"start": 0.05, "stop": 20.0, "num": 40, "spacing": "log"},
        "B_grid": {"start": 0.0, "stop": 22.5, "num": 31, "spacing": "linear"},
        "beta_grid": {"start": 0.02, "stop": 20.0, "num": 30, "spacing": "log"},
    },
}


def list_presets() -> list[str]:
    return list(_PRESETS)


def preset_dict(name: str) -> dict:
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(_PRESETS)}")
    return copy.deepcopy(_PRESETS[name])


def preset(name: str) -> ExperimentConfig:
    return ExperimentConfig.from_dict(preset_dict(name))


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "model":
            out[key] = _merge(out[key], value)
        elif key == "model" and isinstance(value, dict) and isinstance(out.get(key), dict):
            # a different model kind replaces the preset model entirely
            same = value.get("kind", out[key].get("kind")) == out[key].get("kind")
            out[key] = {**out[key], **value} if same else dict(value)
        else:
            out[key] = value
    return out


def load_config(path: str | Path | None = None, preset_name: str | None = None) -> ExperimentConfig:
    """Read a JSON experiment document, optionally layered over a preset."""
    if path is None and preset_name is None:
        raise ConfigError("give a configuration file or a preset")
    data = preset_dict(preset_name) if preset_name else {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                override = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from None
        if not isinstance(override, dict):
            raise ConfigError("configuration must be a JSON object")
        data = _merge(data, override)
    return ExperimentConfig.from_dict(data)


def save_config(config: ExperimentConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
