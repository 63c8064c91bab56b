"""Experiment configuration: a JSON document validated against a strict
schema (unknown keys are rejected everywhere), with defaults applied
after validation and dotted-path overrides for command-line use.
"""

import copy
import json

import jsonschema

from .model import DENSE_SCHEMES

SCHEME_NAMES = [
    "fruitfly",
    "posh",
    "spherical",
    "biohash",
    "bosl",
    "lsh",
    "itq",
    "knnh",
]

_SYNTH_DATASET = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "classes", "per_class", "dim"],
    "properties": {
        "kind": {"const": "synthetic"},
        "classes": {"type": "integer", "minimum": 1},
        "per_class": {"type": "integer", "minimum": 1},
        "dim": {"type": "integer", "minimum": 1},
        "separation": {"type": "number", "exclusiveMinimum": 0},
        "noise": {"type": "number", "minimum": 0},
        "n_queries": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer"},
    },
}

_FILE_DATASET = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "targets", "queries"],
    "properties": {
        "kind": {"enum": ["fvecs", "csv", "raw"]},
        "targets": {"type": "string"},
        "queries": {"type": "string"},
        "target_labels": {"type": "string"},
        "query_labels": {"type": "string"},
        "label_column": {"type": "string"},
        "dim": {"type": "integer", "minimum": 1},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["dataset", "scheme", "D"],
    "properties": {
        "dataset": {"oneOf": [_SYNTH_DATASET, _FILE_DATASET]},
        "scheme": {"enum": SCHEME_NAMES},
        "D": {"type": "integer", "minimum": 1},
        "alpha": {"type": "integer", "minimum": 1},
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epochs": {"type": "integer", "minimum": 0},
                "mini_batch": {"type": "integer", "minimum": 1},
                "full_batch": {"type": "boolean"},
                "train_size": {"type": "integer", "minimum": 1},
                "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "lr": {"type": "number", "exclusiveMinimum": 0},
                "iters": {"type": "integer", "minimum": 0},
                "rounds": {"type": "integer", "minimum": 1},
                "n_neighbors": {"type": "integer", "minimum": 1},
            },
        },
        "refinement": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mode"],
            "properties": {
                "mode": {"enum": ["off", "linear", "sbiht"]},
                "oversample": {"type": "number", "minimum": 1},
                "max_iters": {"type": "integer", "minimum": 0},
            },
        },
        "coarse": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "nprobe": {"type": "integer", "minimum": 1},
            },
        },
        "relevance": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["label", "metric"]},
                "metric_space": {"enum": ["euclidean", "cosine"]},
                "k": {"type": "integer", "minimum": 1},
            },
        },
        "metric": {"enum": ["map", "precision"]},
        "n": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
}

_DEFAULTS = {
    "train": {},
    "refinement": {"mode": "off", "oversample": 2.0, "max_iters": 100},
    "coarse": {"enabled": False, "nprobe": 20},
    "relevance": {"mode": "label", "metric_space": "euclidean"},
    "metric": "map",
    "n": 100,
    "trials": 10,
    "seed": 0,
}


class ConfigError(ValueError):
    """Invalid experiment configuration (usage error, exit code 2)."""


def validate_config(cfg):
    """Schema-check a config dict, apply defaults, and enforce the
    cross-field rules the schema cannot express. Returns a new dict."""
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config key {path}: {exc.message}") from None
    cfg = copy.deepcopy(cfg)
    for key, value in _DEFAULTS.items():
        if isinstance(value, dict):
            merged = dict(value)
            merged.update(cfg.get(key, {}))
            cfg[key] = merged
        else:
            cfg.setdefault(key, value)

    scheme = cfg["scheme"]
    dense = scheme in DENSE_SCHEMES
    if dense:
        if "alpha" in cfg:
            raise ConfigError(f"scheme {scheme!r} emits dense codes; remove alpha")
    else:
        if "alpha" not in cfg:
            raise ConfigError(f"scheme {scheme!r} requires alpha")
        if cfg["alpha"] > cfg["D"]:
            raise ConfigError(
                f"alpha ({cfg['alpha']}) must not exceed D ({cfg['D']})"
            )
    if dense and cfg["refinement"]["mode"] != "off":
        raise ConfigError("refinement applies to sparse schemes only")
    ds = cfg["dataset"]
    if ds["kind"] == "synthetic":
        ds.setdefault("separation", 1.0)
        ds.setdefault("noise", 1.0)
        ds.setdefault("n_queries", 0)
    if ds["kind"] == "raw" and "dim" not in ds:
        raise ConfigError("raw datasets require dim")
    return cfg


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        with open(path, "r") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return validate_config(cfg)


def apply_overrides(cfg, pairs):
    """Apply key=value overrides (dotted paths) and re-validate.

    Values parse as JSON when possible, falling back to plain strings,
    so `--set train.epochs=10` and `--set scheme=posh` both work.
    """
    cfg = copy.deepcopy(cfg)
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, _, raw = pair.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = value
    return validate_config(cfg)
