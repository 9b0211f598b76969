"""Run configuration: one YAML file with a versioned schema.

Every tunable that the benchmark leaves open (weights, decay constants, turn
bands, tolerances) lives here. Unknown keys are rejected so typos do not
silently fall back to defaults.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .geo import GeoPoint
from .instructions import REPRESENTATIVE_DEFLECTION, TurnBands, TurnClass
from .metrics import MetricParams, SimilarityWeights

SCHEMA_VERSION = 1

DEFAULTS: dict[str, Any] = {
    "version": SCHEMA_VERSION,
    "graph": {
        "source": "grid",  # "grid" or a path to an edge-list JSONL / GeoJSON file
        "format": None,
        "grid": {"rows": 40, "cols": 40, "spacing": 100.0, "jitter": 10.0, "seed": 7,
                 "origin": [43.6426, -79.3871]},
    },
    "city": {"name": "grid", "country": None, "center": None, "sigma": 2000.0, "r_min": 400.0, "r_max": 2600.0},
    "dataset": {"n": 300, "seed": 7, "min_length": 500.0, "max_length": 2500.0, "buffer": 5.0,
                "orientation": "ascending"},
    "trials": {"n": 6},
    "metrics": {
        "step": 5.0, "match_tol": 20.0, "buffer": 20.0, "cell": 5.0,
        "lambda_hd": 150.0, "lambda_fd": 250.0, "lambda_sco": 150.0,
        "weights": {k: 1 / 7 for k in ("LR", "HD", "FD", "ED", "JI", "A", "SCO")},
    },
    "bands": {"straight": 11.0, "slight": 45.0, "plain": 136.0, "sharp": 170.0},
    "deflections": {"slight": 27.5, "plain": 90.0, "sharp": 153.0, "u_turn": 180.0, "keep": 20.0},
    "tolerances": {"return_m": 20.0, "snap_cap_m": 250.0, "inversion_threshold": 0.8,
                   "inversion_distance_tol": 0.1, "unparseable_ratio": 0.2, "min_net_displacement_m": 20.0},
    "normalizer": {"version": 1},
    "client": {"mode": "replay", "endpoint": "https://api.openai.com/v1/chat/completions", "model": "replay",
               "api_key_env": "OPENAI_API_KEY", "temperature": 0.0, "logprobs": True, "max_retries": 3,
               "timeout": 60.0, "audit_path": None},
}

_NULLABLE = {("graph", "format"), ("city", "country"), ("city", "center"), ("client", "audit_path")}


def _merge(base: dict, over: dict, path: tuple = ()) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        here = path + (k,)
        if k not in base:
            raise ConfigError(f"unknown config key {'.'.join(map(str, here))!r}")
        b = base[k]
        if isinstance(b, dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {'.'.join(here)!r} must be a mapping")
            # weights are replaced wholesale so partial weight sets fail validation
            out[k] = dict(v) if here == ("metrics", "weights") else _merge(b, v, here)
            if here == ("metrics", "weights"):
                unknown = set(v) - set(b)
                if unknown:
                    raise ConfigError(f"unknown similarity weight(s): {', '.join(sorted(unknown))}")
        else:
            if v is None and here not in _NULLABLE:
                raise ConfigError(f"config key {'.'.join(here)!r} may not be null")
            if isinstance(b, bool) and not isinstance(v, bool):
                raise ConfigError(f"config key {'.'.join(here)!r} must be a boolean")
            if isinstance(b, (int, float)) and not isinstance(b, bool) and not isinstance(v, (int, float)):
                raise ConfigError(f"config key {'.'.join(here)!r} must be numeric")
            out[k] = v
    return out


@dataclass
class RunConfig:
    data: dict

    def __getitem__(self, k):
        return self.data[k]

    def metric_params(self) -> MetricParams:
        m, t = self.data["metrics"], self.data["tolerances"]
        return MetricParams(step=m["step"], match_tol=m["match_tol"], buffer=m["buffer"], cell=m["cell"],
                            lambda_hd=m["lambda_hd"], lambda_fd=m["lambda_fd"], lambda_sco=m["lambda_sco"],
                            return_tol=t["return_m"])

    def weights(self) -> SimilarityWeights:
        try:
            return SimilarityWeights.from_mapping(self.data["metrics"]["weights"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def bands(self) -> TurnBands:
        return TurnBands(**self.data["bands"])

    def deflections(self) -> dict:
        d = self.data["deflections"]
        sign = {"left": -1.0, "right": 1.0}
        out = dict(REPRESENTATIVE_DEFLECTION)
        for side, s in sign.items():
            out[TurnClass(f"slight-{side}")] = s * d["slight"]
            out[TurnClass(side)] = s * d["plain"]
            out[TurnClass(f"sharp-{side}")] = s * d["sharp"]
            out[TurnClass(f"keep-{side}")] = s * d["keep"]
        out[TurnClass.U_TURN] = d["u_turn"]
        return out

    def trial_kwargs(self) -> dict:
        t = self.data["tolerances"]
        return dict(snap_cap=t["snap_cap_m"], inversion_threshold=t["inversion_threshold"],
                    inversion_distance_tol=t["inversion_distance_tol"], unparseable_ratio=t["unparseable_ratio"],
                    deflections=self.deflections())

    def grid_origin(self) -> GeoPoint:
        return GeoPoint(*self.data["graph"]["grid"]["origin"])


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    data = copy.deepcopy(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"config file {p} not found")
        try:
            user = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {p} is not valid YAML: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config file must contain a mapping")
        if user.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config version {user.get('version')!r}; expected {SCHEMA_VERSION}")
        data = _merge(data, user)
    if overrides:
        data = _merge(data, overrides)
    cfg = RunConfig(data)
    cfg.weights()
    b = cfg.bands()
    if not 0 < b.straight < b.slight < b.plain <= b.sharp <= 180:
        raise ConfigError("turn bands must satisfy 0 < straight < slight < plain <= sharp <= 180")
    if data["dataset"]["orientation"] not in ("ascending", "literal"):
        raise ConfigError("dataset.orientation must be 'ascending' or 'literal'")
    if data["client"]["mode"] not in ("replay", "live"):
        raise ConfigError("client.mode must be 'replay' or 'live'")
    return cfg


def dump_defaults() -> str:
    return yaml.safe_dump(DEFAULTS, sort_keys=False)
