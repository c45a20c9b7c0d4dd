"""Experiment configuration: a single JSON document describing one run."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .model import FirstOrderState, InteractionKernel, SecondOrderState, SystemConfig
from .schedule import ScheduleMatrix, gen_isc_star, gen_pe_matrix


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    system: SystemConfig
    order: int
    kernel: InteractionKernel
    matrix: ScheduleMatrix
    initial_state: Union[FirstOrderState, SecondOrderState]
    horizon: float
    step: float
    out_dir: Path
    raw: dict
    seed: Optional[int]

    @property
    def hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing '{key}' in {where}")
    return d[key]


def _schedule(spec: dict, system: SystemConfig, base: Path) -> ScheduleMatrix:
    kind = _require(spec, "type", "schedule")
    n = system.n_agents
    if kind == "constant":
        return ScheduleMatrix.constant(n, float(spec.get("value", 1.0)))
    if kind == "inline":
        return ScheduleMatrix.from_entries(n, _require(spec, "entries", "schedule"))
    if kind == "file":
        path = base / _require(spec, "path", "schedule")
        if not path.is_file():
            raise ConfigError(f"schedule file not found: {path}")
        try:
            return ScheduleMatrix.load(n, path)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ConfigError(f"malformed schedule file {path}: {exc}") from exc
    if kind == "generator":
        gen = _require(spec, "generator", "schedule")
        phase = spec.get("phase", 0.0)
        seed = spec.get("seed")
        if phase is None and seed is None:
            raise ConfigError("random schedule phases need a 'seed'")
        T = float(spec.get("window", system.window))
        mu = float(spec.get("service", system.service))
        if gen == "pe":
            return gen_pe_matrix(n, T, mu, duty_phase=phase, seed=seed)
        if gen == "isc-star":
            return gen_isc_star(n, T, mu, int(spec.get("hub", 0)), seed=seed, duty_phase=phase)
        raise ConfigError(f"unknown schedule generator '{gen}'")
    raise ConfigError(f"unknown schedule type '{kind}'")


def _initial(spec: dict, system: SystemConfig, order: int):
    kind = _require(spec, "type", "initial")
    n, d = system.n_agents, system.dim
    if kind == "explicit":
        x = np.asarray(_require(spec, "positions", "initial"), dtype=float).reshape(n, d)
        if order == 2:
            v = np.asarray(_require(spec, "velocities", "initial"), dtype=float).reshape(n, d)
            return SecondOrderState(x, v)
        return FirstOrderState(x)
    if kind == "uniform":
        if spec.get("seed") is None:
            raise ConfigError("random initial state needs a 'seed'")
        rng = np.random.default_rng(int(spec["seed"]))
        x = rng.uniform(float(spec.get("low", 0.0)), float(spec.get("high", 1.0)), size=(n, d))
        if order == 2:
            v = rng.uniform(float(spec.get("velocity_low", -1.0)),
                            float(spec.get("velocity_high", 1.0)), size=(n, d))
            return SecondOrderState(x, v)
        return FirstOrderState(x)
    raise ConfigError(f"unknown initial state type '{kind}'")


def build(raw: dict, base: Path = Path("."), out_override: Optional[str] = None) -> ExperimentConfig:
    """Turn a parsed config document into simulation objects."""
    try:
        sys_spec = _require(raw, "system", "config")
        system = SystemConfig(
            n_agents=int(_require(sys_spec, "n_agents", "system")),
            dim=int(sys_spec.get("dim", 1)),
            scaling=sys_spec.get("scaling", "fixed"),
            condition=sys_spec.get("condition", "PE"),
            window=float(_require(sys_spec, "window", "system")),
            service=float(_require(sys_spec, "service", "system")),
        )
        order = int(raw.get("order", 1))
        if order not in (1, 2):
            raise ConfigError(f"order must be 1 or 2, got {order}")
        kernel = InteractionKernel.from_dict(_require(raw, "kernel", "config"))
        matrix = _schedule(_require(raw, "schedule", "config"), system, base)
        state = _initial(_require(raw, "initial", "config"), system, order)
        horizon = float(_require(raw, "horizon", "config"))
        step = float(raw.get("step", 1e-3 * system.window))
        if not (horizon > 0 and step > 0):
            raise ConfigError("horizon and step must be positive")
        out_dir = (Path(out_override) if out_override
                   else base / raw.get("outputs", {}).get("dir", "out"))
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    seed = raw.get("initial", {}).get("seed")
    return ExperimentConfig(system, order, kernel, matrix, state, horizon, step,
                            out_dir, raw, seed)


def load(path, step: Optional[float] = None, seed: Optional[int] = None,
         out: Optional[str] = None) -> ExperimentConfig:
    """Read a config file, apply command-line overrides, and build it.

    A ``seed`` override replaces the seed of every randomized section.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = copy.deepcopy(raw)
    if step is not None:
        raw["step"] = step
    if seed is not None:
        for section in ("initial", "schedule"):
            if isinstance(raw.get(section), dict) and "seed" in raw[section]:
                raw[section]["seed"] = seed
    return build(raw, path.parent, out)
