"""Experiment configuration documents.

A document is a flat JSON object.  Frequencies are ordinary frequencies in Hz
(keys ending in ``_hz``) and are converted to angular frequency exactly once,
in :meth:`ConfigDocument.physical_params`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from .blockers import Method
from .protocol import DEFAULT_DELTA_T, RunConfig
from .tripod import TWO_PI, PhysicalParams, default_params, default_branching


class ConfigError(ValueError):
    pass


def _defaults_hz() -> dict[str, float]:
    p = default_params()
    return {
        "rabi_hz": p.rabi / TWO_PI,
        "detuning_hz": p.detuning / TWO_PI,
        "zeeman_ground_hz": p.zeeman_ground / TWO_PI,
        "zeeman_excited_hz": p.zeeman_excited / TWO_PI,
        "linewidth_hz": p.linewidth / TWO_PI,
    }


_HZ = _defaults_hz()


@dataclass
class ConfigDocument:
    rabi_hz: float = _HZ["rabi_hz"]
    detuning_hz: float = _HZ["detuning_hz"]
    zeeman_ground_hz: float = _HZ["zeeman_ground_hz"]
    zeeman_excited_hz: float = _HZ["zeeman_excited_hz"]
    linewidth_hz: float = _HZ["linewidth_hz"]
    branching: list[list[float]] | None = None
    method: str = "erase"
    cycles: int = 1
    bias_phi_rad: float = 0.0
    delta_t_rad: float = DEFAULT_DELTA_T
    free_time_s: float | None = None
    closing: str = "tritter"
    grid: str = f"0:{4 * math.pi!r}:400"
    events: int = 1_000_000
    repeats: int = 200
    seed: int | None = None
    exact: bool = False
    workers: int = 1
    omega1_factor: float = 100.0
    out: str | None = None
    format: str | None = None

    def __post_init__(self):
        try:
            Method(self.method)
        except ValueError:
            raise ConfigError(f"unknown method {self.method!r}; use erase, dephase or spontaneous") from None
        if self.closing not in ("tritter", "none"):
            raise ConfigError(f"closing must be 'tritter' or 'none', got {self.closing!r}")
        if self.format not in (None, "csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        for key in ("cycles", "events", "repeats", "workers"):
            if not isinstance(getattr(self, key), int) or getattr(self, key) < 1:
                raise ConfigError(f"{key} must be a positive integer")
        if self.seed is not None and not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ConfigError("seed must be a non-negative 64-bit integer")
        parse_grid(self.grid)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ConfigDocument":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "ConfigDocument":
        """Read a config file; a JSON report is accepted through its ``config`` echo."""
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        if "tool" in data and isinstance(data.get("config"), dict):
            data = data["config"]
        return cls.from_dict(data)

    def merged(self, overrides: dict[str, Any]) -> "ConfigDocument":
        data = self.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return self.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def physical_params(self) -> PhysicalParams:
        try:
            return PhysicalParams(
                rabi=TWO_PI * self.rabi_hz,
                detuning=TWO_PI * self.detuning_hz,
                zeeman_ground=TWO_PI * self.zeeman_ground_hz,
                zeeman_excited=TWO_PI * self.zeeman_excited_hz,
                linewidth=TWO_PI * self.linewidth_hz,
                branching=default_branching() if self.branching is None else self.branching,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def run_config(self) -> RunConfig:
        params = self.physical_params()
        delta_t = self.delta_t_rad
        if self.free_time_s is not None:
            if self.free_time_s < 0:
                raise ConfigError("free_time_s must be non-negative")
            delta_t = params.zeeman_ground * self.free_time_s
        try:
            return RunConfig(
                params=params,
                method=self.method,
                cycles=self.cycles,
                delta_t=delta_t,
                closing=np.eye(3) if self.closing == "none" else None,
                bias_phi=self.bias_phi_rad,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def parse_grid(spec: str) -> np.ndarray:
    """``"MIN:MAX:POINTS"`` -> inclusive linspace."""
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except (AttributeError, ValueError):
        raise ConfigError(f"grid must look like MIN:MAX:POINTS, got {spec!r}") from None
    if n < 1:
        raise ConfigError("grid needs at least one point")
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise ConfigError(f"invalid grid bounds {lo}..{hi}")
    return np.linspace(lo, hi, n)
