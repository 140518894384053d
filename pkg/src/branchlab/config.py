"""JSON config schemas and loaders for the command-line front end.

Every subcommand validates its config against a JSON Schema before any work;
violations are reported with JSON-pointer paths and exit code 2.
"""
from __future__ import annotations

import json

import jsonschema

from .harness import (CovarianceCheck, ExperimentConfig, ExplosionStudyConfig,
                      KS_SIGNIFICANCE_DEFAULT)
from .offspring import ProcessParams, spec_from_json


class ConfigError(ValueError):
    pass


_OFFSPRING_SCHEMA = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"type": "string",
                   "enum": ["geometric", "poisson", "birth_death",
                            "log_supercritical", "stable_critical",
                            "neveu_harmonic", "generalized_neveu",
                            "luria_delbruck", "sibuya"]},
        "params": {"type": "object"},
    },
    "additionalProperties": False,
}

_POSITIVE_INT = {"type": "integer", "minimum": 1}
_SEED = {"type": "integer", "minimum": 0}
_TIME_GRID = {"type": "array", "items": {"type": "number", "minimum": 0},
              "minItems": 1}

EXPERIMENT_SCHEMA = {
    "type": "object",
    "required": ["id", "regime", "offspring", "rate_a", "initial_n",
                 "replicates", "grid", "seed"],
    "properties": {
        "id": {"type": "string"},
        "regime": {"type": "string",
                   "enum": ["gaussian", "stable_ou", "csbp",
                            "explosive_conditional"]},
        "offspring": _OFFSPRING_SCHEMA,
        "rate_a": {"type": "number", "exclusiveMinimum": 0},
        "initial_n": _POSITIVE_INT,
        "replicates": _POSITIVE_INT,
        "limit_draws": _POSITIVE_INT,
        "grid": _TIME_GRID,
        "seed": _SEED,
        "significance": {"type": "number", "exclusiveMinimum": 0,
                         "exclusiveMaximum": 1},
        "explosion_cap": {"type": "integer", "minimum": 2},
        "laplace_etas": {"type": "array", "items": {"type": "number",
                                                    "exclusiveMinimum": 0}},
        "covariance": {
            "type": "object",
            "required": ["pairs", "replicates"],
            "properties": {
                "pairs": {"type": "array", "minItems": 1,
                          "items": {"type": "array", "minItems": 2,
                                    "maxItems": 2,
                                    "items": {"type": "number", "minimum": 0}}},
                "replicates": _POSITIVE_INT,
                "max_rel_error": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

SIMULATE_SCHEMA = {
    "type": "object",
    "required": ["offspring", "rate_a", "initial_n", "replicates", "grid",
                 "seed"],
    "properties": {
        "offspring": _OFFSPRING_SCHEMA,
        "rate_a": {"type": "number", "exclusiveMinimum": 0},
        "initial_n": _POSITIVE_INT,
        "replicates": _POSITIVE_INT,
        "grid": _TIME_GRID,
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "seed": _SEED,
        "explosion_cap": {"type": "integer", "minimum": 2},
    },
    "additionalProperties": False,
}

PGF_SCHEMA = {
    "type": "object",
    "required": ["offspring", "rate_a", "s_grid", "t_grid"],
    "properties": {
        "offspring": _OFFSPRING_SCHEMA,
        "rate_a": {"type": "number", "exclusiveMinimum": 0},
        "s_grid": {"type": "array", "minItems": 1,
                   "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "t_grid": _TIME_GRID,
        "rel_tol": {"type": "number", "exclusiveMinimum": 0},
        "abs_tol": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

LIMITS_SCHEMA = {
    "type": "object",
    "required": ["offspring", "rate_a"],
    "properties": {
        "offspring": _OFFSPRING_SCHEMA,
        "rate_a": {"type": "number", "exclusiveMinimum": 0},
        "times": _TIME_GRID,
        "n_values": {"type": "array", "items": _POSITIVE_INT},
        "sample": {
            "type": "object",
            "required": ["regime", "count", "seed"],
            "properties": {
                "regime": {"type": "string",
                           "enum": ["gaussian", "stable_ou", "csbp"]},
                "count": _POSITIVE_INT,
                "seed": _SEED,
                "variance": {"type": "number", "minimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "c": {"type": "number", "exclusiveMinimum": 0},
                "beta": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

EXPLOSION_SCHEMA = {
    "type": "object",
    "required": ["id", "offspring", "rate_a", "initial_n", "replicates",
                 "seed"],
    "properties": {
        "id": {"type": "string"},
        "offspring": _OFFSPRING_SCHEMA,
        "rate_a": {"type": "number", "exclusiveMinimum": 0},
        "initial_n": _POSITIVE_INT,
        "replicates": _POSITIVE_INT,
        "seed": _SEED,
        "explosion_cap": {"type": "integer", "minimum": 2},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "probe_times": _TIME_GRID,
        "mean_rel_tol": {"type": "number", "exclusiveMinimum": 0},
        "check_cap_doubling": {"type": "boolean"},
        "cap_doubling_rel_tol": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}


def validate(obj: dict, schema: dict) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(obj), key=lambda e: list(e.absolute_path))
    if errors:
        msgs = []
        for e in errors[:8]:
            pointer = "/" + "/".join(str(p) for p in e.absolute_path)
            msgs.append(f"{pointer}: {e.message}")
        raise ConfigError("; ".join(msgs))


def load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def _params_from(obj: dict) -> ProcessParams:
    try:
        spec = spec_from_json(obj["offspring"])
        return ProcessParams(a=float(obj["rate_a"]), offspring=spec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def experiment_from_json(obj: dict, seed_override=None,
                         significance_override=None) -> ExperimentConfig:
    validate(obj, EXPERIMENT_SCHEMA)
    params = _params_from(obj)
    cov = None
    if "covariance" in obj:
        cov = CovarianceCheck(pairs=tuple(tuple(p) for p in obj["covariance"]["pairs"]),
                              replicates=obj["covariance"]["replicates"],
                              max_rel_error=obj["covariance"].get("max_rel_error", 0.05))
    try:
        return ExperimentConfig(
            id=obj["id"], regime=obj["regime"], params=params,
            initial_n=obj["initial_n"], replicates=obj["replicates"],
            grid=tuple(float(t) for t in obj["grid"]),
            seed=int(seed_override if seed_override is not None else obj["seed"]),
            limit_draws=obj.get("limit_draws"),
            significance=float(significance_override
                               if significance_override is not None
                               else obj.get("significance", KS_SIGNIFICANCE_DEFAULT)),
            explosion_cap=obj.get("explosion_cap", 10 ** 9),
            laplace_etas=tuple(obj.get("laplace_etas", (0.25, 0.5, 1.0))),
            covariance=cov)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def explosion_from_json(obj: dict, seed_override=None) -> ExplosionStudyConfig:
    validate(obj, EXPLOSION_SCHEMA)
    params = _params_from(obj)
    try:
        return ExplosionStudyConfig(
            id=obj["id"], params=params, initial_n=obj["initial_n"],
            replicates=obj["replicates"],
            seed=int(seed_override if seed_override is not None else obj["seed"]),
            explosion_cap=obj.get("explosion_cap", 10 ** 7),
            horizon=obj.get("horizon", 200.0),
            probe_times=tuple(obj.get("probe_times", ())),
            mean_rel_tol=obj.get("mean_rel_tol", 0.05),
            check_cap_doubling=obj.get("check_cap_doubling", True),
            cap_doubling_rel_tol=obj.get("cap_doubling_rel_tol", 0.01))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
