"""Declarative experiment configuration: schema validation and builders.

A configuration is a single JSON object (see ``config_schema.json``); every
experiment is fully determined by the configuration plus its seed.  The
window entries of a partition are words in the text format (lowercase =
generator, uppercase = inverse, "" = identity) for Bernoulli models and
integers for Z-factor models.  An explicit ``table`` labeling lists the cell
of every window symbol tuple in row-major order (most significant symbol
first).
"""

from __future__ import annotations

import json
from importlib import resources

import jsonschema
import numpy as np

from .actions import BernoulliModel, FiniteModel, ZFactorModel
from .boundary import StepDistribution
from .measure import (PartitionSpec, coordinate_partition, finite_partition,
                      parity_partition, table_partition, window_tuple_partition)
from .smb import GEODESIC, SkewSystem
from .words import parse_word

DEFAULT_CONFIG: dict = {
    "seed": 12345,
    "rank": 2,
    "model": {"kind": "bernoulli", "probs": [0.5, 0.5]},
    "partition": {"labeling": "coordinate"},
    "cocycle": "geodesic",
    "walk": {"support": ["a", "A"], "probs": [0.8, 0.2]},
    "horizon": 400,
    "samples": 50,
    "method": "pointwise-monte-carlo",
    "cond_depth": 8,
    "mc_fiber_samples": 32,
    "lambdas": [0.5, 1.0, 2.0, 3.0],
    "set": ["a", "ab", "abA"],
    "sphere_mode": "both",
    "cesaro_bound": 1e-9,
    "frontier_width": 12,
    "enumeration_budget": 1 << 22,
    "workers": 1,
    "output_dir": "",
    "label": "",
}


def load_schema() -> dict:
    text = resources.files("smbfree").joinpath("config_schema.json").read_text()
    return json.loads(text)


def validate_config(cfg: dict) -> None:
    jsonschema.validate(cfg, load_schema())


def load_config(path: str | None, overrides: dict | None = None) -> dict:
    """Merge defaults <- config file <- overrides, then schema-validate."""
    cfg = dict(DEFAULT_CONFIG)
    if path:
        with open(path) as fh:
            user = json.load(fh)
        if not isinstance(user, dict):
            raise ValueError("configuration must be a JSON object")
        cfg.update(user)
    if overrides:
        cfg.update({k: v for k, v in overrides.items() if v is not None})
    validate_config(cfg)
    return cfg


def build_model(cfg: dict):
    rank = cfg["rank"]
    m = cfg["model"]
    kind = m["kind"]
    if kind == "bernoulli":
        return BernoulliModel(rank, np.asarray(m["probs"], dtype=float))
    if kind == "zfactor":
        return ZFactorModel(rank, tuple(m["weights"]), np.asarray(m["probs"], dtype=float))
    perms = [np.asarray(p, dtype=np.int64) for p in m["permutations"]]
    if len(perms) != rank:
        raise ValueError(f"finite model needs {rank} generator permutations")
    n = len(perms[0])
    probs = np.asarray(m.get("probs") or np.full(n, 1.0 / n), dtype=float)
    return FiniteModel(rank, probs, tuple(perms))


def _window(entries, model) -> tuple:
    if model.kind == "zfactor":
        return tuple(int(w) for w in entries)
    if model.kind == "bernoulli":
        return tuple(parse_word(str(w), model.rank) for w in entries)
    raise ValueError("window partitions need a symbolic model")


def build_partition(p_cfg: dict, model) -> PartitionSpec:
    labeling = p_cfg["labeling"]
    if labeling == "coordinate":
        return coordinate_partition(model)
    if labeling == "finite":
        return finite_partition(model, p_cfg["cells_of_points"], p_cfg.get("cells"))
    window = _window(p_cfg["window"], model)
    if labeling == "window-tuple":
        return window_tuple_partition(model, window)
    if labeling == "parity":
        return parity_partition(model, window)
    return table_partition(model, window, p_cfg["table"], p_cfg.get("cells"))


def build_walk(cfg: dict, rank: int) -> StepDistribution:
    w = cfg["walk"]
    words = tuple(parse_word(s, rank) for s in w["support"])
    return StepDistribution(words, np.asarray(w["probs"], dtype=float))


def build_system(cfg: dict, *, cocycle: str | None = None) -> SkewSystem:
    model = build_model(cfg)
    partition = build_partition(cfg["partition"], model)
    kind = cocycle or cfg["cocycle"]
    walk = build_walk(cfg, cfg["rank"]) if kind != GEODESIC else None
    return SkewSystem(kind, model, partition, walk)


SUMMARY_SCHEMA: dict = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "smbfree experiment summary",
    "type": "object",
    "required": ["experiment", "seed", "method", "horizon", "samples",
                 "estimate_nats", "stderr", "checks", "units"],
    "properties": {
        "experiment": {"type": "string"},
        "seed": {"type": "integer"},
        "method": {"type": "string"},
        "horizon": {"type": "integer"},
        "samples": {"type": "integer"},
        "estimate_nats": {"type": ["number", "null"]},
        "stderr": {"type": ["number", "null"]},
        "units": {"const": "nats"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "bound", "observed", "pass"],
                "properties": {
                    "name": {"type": "string"},
                    "bound": {"type": ["number", "null"]},
                    "observed": {"type": ["number", "null"]},
                    "pass": {"type": "boolean"},
                },
            },
        },
        "notes": {"type": "object"},
        "csv": {"type": "string"},
    },
}


def validate_summary(summary: dict) -> None:
    jsonschema.validate(summary, SUMMARY_SCHEMA)
