"""Run configuration: a JSON document with defaults, validated before any field is allocated.

Schema (every key optional; missing keys take the defaults below)::

    {
      "seed": 0,
      "out": "runs/default",
      "grid": {"n": 3, "N": 32},
      "ladder": {"lambda": 4, "mu": null, "J": 1, "mode": "toy",
                 "Lambda": [[1]], "scales": [0.01]},
      "besov": [{"p": 3, "q": 2}],
      "stationary": {"r": 2, "max_iters": 30, "tol": 1e-10, "radius": null},
      "evolution": {"dt": 0.01, "T": 10, "theta": 4, "p": 2, "q": 2, "eta": 1.0,
                    "store_every": 10, "windows": 5, "w0_amplitude": 0.01, "w0_band": 4},
      "prop31": {"band": 3.0, "drift": 0.2, "cases": [...]},
      "freq_support": {"lambda": 16, "ell": 1, "span": 6, "points": 96, "n": 3},
      "benches": {"n": 3, "N": 32, "samples": 4, "bilinear": {...}, "duhamel": {...}},
      "scaling": {"lambdas": [8, 16, 32], "n": 3, "pairs": [[2, 2], ["inf", 1], [3, "inf"]],
                  "scale": 1.0, "tolerance": 2.0}
    }

The string ``"inf"`` stands for an infinite exponent.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .blocks import LadderError, build_ladder
from .solvers import EvolutionConfig, StationarySolveConfig
from .spectral import Grid


class ConfigError(ValueError):
    """The configuration violates a precondition; raised before any field is allocated."""


DEFAULTS: dict = {
    "seed": 0,
    "out": "runs/default",
    "grid": {"n": 3, "N": 32},
    "ladder": {"lambda": 4, "mu": None, "J": 1, "mode": "toy", "Lambda": [[1]], "scales": [0.01]},
    "besov": [{"p": 3, "q": 2}],
    "stationary": {"r": 2, "max_iters": 30, "tol": 1e-10, "radius": None},
    "evolution": {
        "dt": 0.01,
        "T": 10.0,
        "theta": 4,
        "p": 2,
        "q": 2,
        "eta": 1.0,
        "store_every": 10,
        "windows": 5,
        "w0_amplitude": 0.01,
        "w0_band": 4,
    },
    "prop31": {
        "band": 3.0,
        "drift": 0.2,
        "cases": [
            {"n": 2, "lambda": 16, "directions": [[1, 0]], "coeffs": [1.0], "s": 0, "p": 2, "q": 2},
            {"n": 2, "lambda": 8, "directions": [[1, 0], [0, 1], [1, 1]], "coeffs": [1.0, 0.5, 2.0], "s": 1, "p": 2, "q": 2},
            {"n": 2, "lambda": 8, "directions": [[1, 0], [0, 1]], "coeffs": [1.0, -1.0], "s": -1, "p": 4, "q": 1},
            {"n": 3, "lambda": 16, "directions": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "coeffs": [1.0], "s": 0, "p": "inf", "q": "inf"},
            {"n": 3, "lambda": 8, "directions": [[1, 0, 0], [0, 1, 0], [1, 1, 0]], "coeffs": [1.0], "s": 1, "p": 3, "q": 2},
        ],
    },
    "freq_support": {"n": 3, "lambda": 16, "ell": 1, "span": 6, "points": 96},
    "benches": {
        "n": 3,
        "N": 32,
        "samples": 4,
        "band": 4,
        "bilinear": {"p": 4, "q": 2, "r": 2},
        "duhamel": {"p": 2, "q": 2, "theta": 4, "T": 1.0, "steps": 32},
    },
    "scaling": {"lambdas": [8, 16, 32], "n": 3, "pairs": [[2, 2], ["inf", 1], [3, "inf"]], "scale": 1.0, "tolerance": 2.0},
}


def exponent(x) -> float:
    if isinstance(x, str):
        if x.lower() in ("inf", "infinity", "∞"):
            return math.inf
        return float(x)
    return float(x)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunConfig:
    """Validated run configuration (see the module docstring for the schema)."""

    data: dict

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: dict | None = None) -> "RunConfig":
        data = DEFAULTS
        if path is not None:
            try:
                user = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            data = _merge(data, user)
        if overrides:
            data = _merge(data, overrides)
        cfg = cls(copy.deepcopy(data))
        return cfg

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def grid(self) -> Grid:
        g = self.data["grid"]
        try:
            return Grid(int(g["n"]), int(g["N"]))
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from exc

    def ladder(self):
        lad = self.data["ladder"]
        try:
            grid = self.grid() if lad.get("mode", "toy") == "toy" else None
            return build_ladder(
                lad["lambda"],
                mu=lad.get("mu"),
                J=int(lad.get("J", 1)),
                grid=grid,
                mode=lad.get("mode", "toy"),
                Lambda=lad.get("Lambda"),
                scales=lad.get("scales"),
                n=int(self.data["grid"]["n"]),
            )
        except LadderError as exc:
            raise ConfigError(f"ladder: {exc}") from exc

    def stationary(self) -> StationarySolveConfig:
        st = self.data["stationary"]
        cfg = StationarySolveConfig(
            r=exponent(st["r"]), max_iters=int(st["max_iters"]), tol=float(st["tol"]), radius=st.get("radius")
        )
        try:
            cfg.validate(int(self.data["grid"]["n"]))
        except ValueError as exc:
            raise ConfigError(f"stationary: {exc}") from exc
        return cfg

    def evolution(self) -> EvolutionConfig:
        ev = self.data["evolution"]
        cfg = EvolutionConfig(
            dt=float(ev["dt"]),
            T=float(ev["T"]),
            theta=exponent(ev["theta"]),
            p=exponent(ev["p"]),
            q=exponent(ev["q"]),
            eta=float(ev["eta"]),
            store_every=int(ev["store_every"]),
            windows=int(ev["windows"]),
        )
        try:
            cfg.validate(int(self.data["grid"]["n"]))
        except ValueError as exc:
            raise ConfigError(f"evolution: {exc}") from exc
        return cfg

    def validate(self, sections=("grid", "ladder")) -> None:
        """Check the named sections; raises :class:`ConfigError` naming the violated constraint."""
        for name in sections:
            getattr(self, name)()

    def to_json(self, **kw) -> str:
        return json.dumps(self.data, **kw)
