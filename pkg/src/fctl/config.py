"""JSON run configuration: schema, validation and conversion to model objects.

Example::

    {
      "intersection": {
        "cycle": 100,
        "lost_time": 5,
        "lanes": [
          {"arrival": {"kind": "poisson", "mean": 0.4}},
          {"arrival": {"kind": "geometric", "mean": 0.4}, "weight": 2}
        ]
      },
      "options": {"method": "refined", "rounding": "randomized"},
      "eval": {"lane": 0, "green": 48, "metrics": ["p0", "mean"]}
    }
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from .allocation import IntersectionSpec, LaneSpec, Method, Rounding
from .arrivals import arrival_from_dict
from .errors import ConfigError, FctlError

__all__ = ["SCHEMA", "RunConfig", "load_config", "parse_config", "METRICS"]

METRICS = ("p0", "mean", "delay")

_ARRIVAL = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"enum": ["poisson", "geometric"]}, "mean": {"type": "number", "exclusiveMinimum": 0}},
            "required": ["kind", "mean"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "negative_binomial"},
                "mean": {"type": "number", "exclusiveMinimum": 0},
                "variance": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "mean", "variance"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "custom"},
                "pmf": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2},
            },
            "required": ["kind", "pmf"],
            "additionalProperties": False,
        },
    ]
}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "intersection": {
            "type": "object",
            "properties": {
                "cycle": {"type": "number", "exclusiveMinimum": 0},
                "lost_time": {"type": "number", "minimum": 0},
                "lanes": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "properties": {
                            "arrival": _ARRIVAL,
                            "weight": {"type": "number", "exclusiveMinimum": 0},
                        },
                        "required": ["arrival"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["cycle", "lanes"],
            "additionalProperties": False,
        },
        "options": {
            "type": "object",
            "properties": {
                "method": {"enum": [m.value for m in Method]},
                "rounding": {"enum": [r.value for r in Rounding]},
                "format": {"enum": ["csv", "md"]},
                "webster_form": {"enum": ["classical", "printed"]},
                "exact": {"type": "boolean"},
                "quadrature_max": {"type": "integer", "minimum": 256},
            },
            "additionalProperties": False,
        },
        "eval": {
            "type": "object",
            "properties": {
                "lane": {"type": "integer", "minimum": 0},
                "green": {"type": "number", "exclusiveMinimum": 0},
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "metrics": {"type": "array", "items": {"enum": list(METRICS)}, "uniqueItems": True},
            },
            "additionalProperties": False,
        },
    },
    "required": ["intersection"],
    "additionalProperties": False,
}


@dataclass
class RunConfig:
    intersection: IntersectionSpec
    options: dict[str, Any] = field(default_factory=dict)
    eval: dict[str, Any] = field(default_factory=dict)


def _where(error: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in error.absolute_path)
    return path or "<root>"


def parse_config(data: Any) -> RunConfig:
    """Validate a decoded JSON document and build the model objects."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{_where(e)}: {e.message}" for e in errors]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines))
    inter = data["intersection"]
    lanes = []
    for i, lane in enumerate(inter["lanes"]):
        try:
            lanes.append(LaneSpec(arrival_from_dict(lane["arrival"]), float(lane.get("weight", 1.0))))
        except FctlError as exc:
            raise ConfigError(f"intersection/lanes/{i}: {exc}") from None
    spec = IntersectionSpec(tuple(lanes), float(inter["cycle"]), float(inter.get("lost_time", 0.0)))
    ev = dict(data.get("eval", {}))
    if "lane" in ev and ev["lane"] >= len(lanes):
        raise ConfigError(f"eval/lane: lane index {ev['lane']} out of range (have {len(lanes)} lanes)")
    return RunConfig(spec, dict(data.get("options", {})), ev)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data)
