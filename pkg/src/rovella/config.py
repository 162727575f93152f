"""Experiment configuration: JSON with a version field, strict keys.

Unknown keys anywhere are errors (silent typos in experiment settings
would otherwise produce quietly-wrong runs). Parsing validates the map
parameters immediately.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import EigenTriple, ParamError, RovellaParams, validate_params

CONFIG_VERSION = 1

KINDS = ("simulate", "ulam", "corr", "conv", "loglaw", "dims", "norms",
         "conditions", "report")

_PARAM_KEYS = {"lambda1", "lambda2", "lambda3", "rho", "c0", "c1"}

SETTINGS_KEYS = {
    "simulate": {"map", "x0", "n", "burn_in", "log_integral_ns",
                 "uniform_check_bins", "tail_count", "tail_length",
                 "tail_delta", "tail_eps", "lyapunov_n"},
    "ulam": {"map", "n_bins", "samples_per_bin", "tol", "max_iter", "oracle",
             "oracle_sizes"},
    "corr": {"map", "pairs", "lags", "ensemble", "burn_in", "floor_factor",
             "oracle"},
    "conv": {"map", "pairs", "lags", "ensemble", "floor_factor"},
    "loglaw": {"targets", "radius_exponents", "trials", "cap", "cloud_size",
               "cloud_burn_in", "dims_radius_exponents", "flow", "t_glob",
               "min_uncensored"},
    "dims": {"targets", "radius_exponents", "cloud_size", "cloud_burn_in"},
    "norms": {"corpus_size", "max_pieces", "p_values", "r_values",
              "eps_exponents", "alphas", "square_grid", "slack"},
    "conditions": {"depth", "coverage_bins"},
    "report": {"directory"},
}


class ConfigError(ValueError):
    """Malformed configuration; message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int = 0
    threads: int = 1
    out: str | None = None
    params: RovellaParams | None = None
    settings: dict = field(default_factory=dict)

    def resolved_params(self) -> RovellaParams:
        from .core import default_params

        return self.params if self.params is not None else default_params()

    def to_json(self) -> dict:
        payload: dict = {"version": CONFIG_VERSION, "kind": self.kind,
                         "seed": self.seed, "threads": self.threads}
        if self.out is not None:
            payload["out"] = self.out
        if self.params is not None:
            e = self.params.eigen
            payload["params"] = {
                "lambda1": e.lambda1, "lambda2": e.lambda2,
                "lambda3": e.lambda3, "rho": self.params.rho,
                "c0": self.params.c0, "c1": self.params.c1,
            }
        if self.settings:
            payload["settings"] = dict(sorted(self.settings.items()))
        return payload


def _parse_params(raw: dict) -> RovellaParams:
    unknown = set(raw) - _PARAM_KEYS
    if unknown:
        raise ConfigError(f"unknown params keys: {sorted(unknown)}")
    missing = {"lambda1", "lambda2", "lambda3"} - set(raw)
    if missing:
        raise ConfigError(f"params missing keys: {sorted(missing)}")
    eigen = EigenTriple(float(raw["lambda1"]), float(raw["lambda2"]),
                        float(raw["lambda3"]))
    rho = float(raw["rho"]) if "rho" in raw else 2.0 ** eigen.s
    c0 = float(raw.get("c0", 0.25))
    c1 = float(raw.get("c1", -0.25))
    return validate_params(RovellaParams(eigen, rho, c0, c1))


def parse_config(payload: dict) -> ExperimentConfig:
    if not isinstance(payload, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {"version", "kind", "seed", "threads", "out", "params",
               "settings"}
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if payload.get("version") != CONFIG_VERSION:
        raise ConfigError(f"config version must be {CONFIG_VERSION}")
    kind = payload.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}")
    settings = payload.get("settings", {})
    if not isinstance(settings, dict):
        raise ConfigError("settings must be an object")
    unknown = set(settings) - SETTINGS_KEYS[kind]
    if unknown:
        raise ConfigError(f"unknown settings keys for {kind}: {sorted(unknown)}")
    seed = int(payload.get("seed", 0))
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must fit in u64")
    threads = int(payload.get("threads", 1))
    if threads < 1:
        raise ConfigError("threads must be positive")
    params = None
    if "params" in payload:
        try:
            params = _parse_params(payload["params"])
        except ParamError as exc:
            raise ConfigError(f"invalid params: {exc}") from exc
    sizes = [v for k, v in settings.items()
             if k in {"n", "n_bins", "samples_per_bin", "ensemble", "targets",
                      "trials", "cloud_size", "corpus_size", "square_grid",
                      "depth", "tail_count", "tail_length"}]
    if any(int(v) <= 0 for v in sizes):
        raise ConfigError("all sizes must be positive")
    return ExperimentConfig(kind=kind, seed=seed, threads=threads,
                            out=payload.get("out"), params=params,
                            settings=dict(settings))


def load_config(path) -> ExperimentConfig:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(payload)
