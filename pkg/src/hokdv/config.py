"""Versioned JSON run configuration.

Schema (version 1), every key optional except where noted:

    {
      "version": 1,
      "params": {"n": 5, "p": 2, "sign": 1},          # required
      "grid": {"length": L, "count": N}  or  "auto",
      "data": {"kind": "gaussian", "width": 6.0, "center": 0.0, "bandlimit": null},
      "eps": 0.05, "T": 500.0, "t0": 1.0, "dt": null,
      "samples": {"kind": "geometric" | "linear", "count": 40}  or  {"kind": "list", "times": [...]},
      "checks": ["conservation", ...],
      "decay": {"betas": [0.0], "times": [...], "q": 8.0, "band": [1.2, 2.0], "width": 1.5},
      "sweep": {"eps": [0.2, 0.3, 0.45], "horizon_factor": 10.0, "max_horizon": 500.0, "workers": 1},
      "out": "results",
      "seed": 0
    }
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .evolution import choose_grid, initial_data
from .params import EquationParams
from .spectral import make_grid

CONFIG_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: EquationParams = field(default_factory=lambda: EquationParams(5, 2))
    grid: object = "auto"
    data: dict = field(default_factory=lambda: {"kind": "gaussian", "width": 6.0, "center": 0.0, "bandlimit": None})
    eps: float = 0.05
    T: float = 500.0
    t0: float = 1.0
    dt: float | None = None
    samples: dict = field(default_factory=lambda: {"kind": "geometric", "count": 40})
    checks: list = field(default_factory=lambda: ["conservation"])
    decay: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    out: str = "results"
    seed: int = 0
    version: int = CONFIG_VERSION

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        v = d.pop("version", CONFIG_VERSION)
        if v != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {v}")
        if "params" not in d:
            raise ConfigError("config needs a params block")
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        d["params"] = EquationParams.from_dict(d["params"])
        cfg = cls(**d)
        if cfg.seed < 0 or cfg.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if cfg.T < cfg.t0:
            raise ConfigError("T must be >= t0")
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            return cls.from_dict(json.loads(path.read_text()))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e

    # ----------------------------------------------------------- builders

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def make_grid(self):
        if self.grid == "auto" or self.grid is None:
            d = self.data
            return choose_grid(self.params, self.T - self.t0, d.get("width", 6.0), d.get("center", 0.0),
                               d.get("bandlimit"), xi_speed=d.get("xi_speed"), xi_resolve=d.get("xi_resolve"))
        return make_grid(float(self.grid["length"]), int(self.grid["count"]))

    def initial_data(self, grid=None):
        grid = grid or self.make_grid()
        d = self.data
        return initial_data(grid, self.params, kind=d.get("kind", "gaussian"), eps=self.eps,
                            center=d.get("center", 0.0), width=d.get("width", 6.0),
                            bandlimit=d.get("bandlimit"), allow_large=bool(d.get("allow_large", False)))

    def sample_times(self) -> np.ndarray:
        s = self.samples
        kind = s.get("kind", "geometric")
        if kind == "list":
            return np.array(sorted(float(t) for t in s["times"]))
        count = int(s.get("count", 40))
        if kind == "geometric":
            return np.geomspace(self.t0, self.T, count)
        if kind == "linear":
            return np.linspace(self.t0, self.T, count)
        raise ConfigError(f"unknown sample kind {kind!r}")
