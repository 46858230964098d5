"""JSON manifest schemas for the command-line tools (validated with jsonschema)."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

SCHEMA_VERSION = 1


class ManifestError(ValueError):
    """Manifest failed validation (exit code 2)."""


_pos_int = {"type": "integer", "minimum": 1}
_seed = {"type": "integer", "minimum": 0}
_version = {"type": "integer"}
_eps = {"oneOf": [{"type": "number", "minimum": 0}, {"const": "auto"}]}
_estimator = {"enum": ["entropy", "nuclear", "least_squares"]}
_int_or_list = {"oneOf": [_pos_int, {"type": "array", "items": _pos_int, "minItems": 1}]}

SOLVER = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "method": {"enum": ["dual", "penalty"]},
        "max_outer": _pos_int,
        "max_inner": _pos_int,
        "eta0": {"type": "number", "exclusiveMinimum": 0},
        "mu0": {"type": "number", "exclusiveMinimum": 0},
        "mu_growth": {"type": "number", "exclusiveMinimum": 1},
        "obj_tol": {"type": "number", "exclusiveMinimum": 0},
        "lambda_floor": {"type": "number", "exclusiveMinimum": 0},
        "max_iter": _pos_int,
        "smoothing": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
    },
}

SCHEMAS = {
    "simulate": {
        "type": "object",
        "additionalProperties": False,
        "required": ["n", "seed"],
        "properties": {
            "schema_version": _version,
            "b": {"type": "integer", "minimum": 1, "maximum": 12},
            "r": _pos_int,
            "state_file": {"type": "string"},
            "equal_spectrum": {"type": "boolean"},
            "n": _pos_int,
            "K": _pos_int,
            "noiseless": {"type": "boolean"},
            "seed": _seed,
            "output": {"type": "string"},
            "state_output": {"type": "string"},
            "csv_output": {"type": "string"},
        },
        "oneOf": [{"required": ["b", "r"]}, {"required": ["state_file"]}],
    },
    "estimate": {
        "type": "object",
        "additionalProperties": False,
        "required": ["dataset", "estimator"],
        "properties": {
            "schema_version": _version,
            "dataset": {"type": "string"},
            "estimator": _estimator,
            "epsilon": _eps,
            "C1": {"type": "number", "exclusiveMinimum": 0},
            "t": {"type": "number", "minimum": 0},
            "feas_tol": {"type": "number", "exclusiveMinimum": 0},
            "solver": SOLVER,
            "output": {"type": "string"},
        },
    },
    "sweep": {
        "type": "object",
        "additionalProperties": False,
        "required": ["grid", "estimator", "seeds"],
        "properties": {
            "schema_version": _version,
            "grid": {
                "type": "object",
                "additionalProperties": False,
                "required": ["m", "r", "n", "K"],
                "properties": {"m": _int_or_list, "r": _int_or_list, "n": _int_or_list, "K": _int_or_list},
            },
            "estimator": {"oneOf": [_estimator, {"type": "array", "items": _estimator, "minItems": 1}]},
            "seeds": {"oneOf": [_pos_int, {"type": "array", "items": _seed, "minItems": 1}]},
            "output_dir": {"type": "string"},
            "epsilon": _eps,
            "C1": {"type": "number", "exclusiveMinimum": 0},
            "min_seeds": _pos_int,
        },
    },
    "pack": {
        "type": "object",
        "additionalProperties": False,
        "required": ["b", "r", "n", "K", "p", "count"],
        "properties": {
            "schema_version": _version,
            "b": {"type": "integer", "minimum": 1, "maximum": 12},
            "r": {"type": "integer", "minimum": 2},
            "n": _pos_int,
            "K": _pos_int,
            "p": {"oneOf": [{"type": "number", "minimum": 1}, {"const": "inf"}]},
            "count": _pos_int,
            "c1": {"type": "number", "exclusiveMinimum": 0},
            "c_sep": {"type": "number", "exclusiveMinimum": 0},
            "seed": _seed,
            "budget": _pos_int,
            "spread_trials": _pos_int,
            "output": {"type": "string"},
        },
    },
}


def validate_manifest(kind: str, obj) -> dict:
    if kind not in SCHEMAS:
        raise ManifestError(f"no manifest schema for command {kind!r}")
    if not isinstance(obj, dict):
        raise ManifestError("manifest must be a JSON object")
    try:
        jsonschema.validate(obj, SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "(root)"
        raise ManifestError(f"{kind} manifest invalid at {where}: {exc.message}") from None
    version = obj.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ManifestError(f"schema_version {version} is not supported (expected {SCHEMA_VERSION})")
    return obj


def load_manifest(kind: str, path) -> dict:
    """Read and validate; OSError propagates (I/O), bad JSON or schema -> ManifestError."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    return validate_manifest(kind, obj)
