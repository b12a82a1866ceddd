"""JSON system configuration: schema validation, parsing and serialization."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator

from .node_survival import NodeSpec
from .process import Constant, IntensityFunction, Linear, PiecewiseConstant, SumIntensity
from .structure import Bridge, Component, KofN, Parallel, Paths, Series, StructureExpr
from .system_survival import SystemModel
from .workload import Exponential, ServiceDistribution, StressDistribution, Uniform, Weibull

__all__ = ["ConfigError", "SCHEMA", "load_config", "parse_config", "dump_config"]


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is a dotted path into the document."""

    def __init__(self, message: str, field: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


def _kind(name: str, required: dict[str, Any]) -> dict:
    return {
        "if": {"properties": {"kind": {"const": name}}, "required": ["kind"]},
        "then": {
            "properties": {"kind": True, **required},
            "required": ["kind", *required],
            "additionalProperties": False,
        },
    }


_NUMBER = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_POS = {"type": "number", "exclusiveMinimum": 0}
_ID = {"type": "string", "minLength": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["nodes", "correlator", "stress", "service", "structure"],
    "additionalProperties": False,
    "properties": {
        "nodes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "baseline", "intensity"],
                "additionalProperties": False,
                "properties": {
                    "id": _ID,
                    "baseline": {"$ref": "#/$defs/intensity"},
                    "intensity": {"$ref": "#/$defs/intensity"},
                },
            },
        },
        "correlator": {"$ref": "#/$defs/intensity"},
        "stress": {
            "type": "object",
            "required": ["support", "probs"],
            "additionalProperties": False,
            "properties": {
                "support": {"type": "array", "minItems": 1, "items": _POS},
                "probs": {"type": "array", "minItems": 1, "items": _POS},
            },
        },
        "service": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["exponential", "uniform", "weibull"]}},
            "allOf": [
                _kind("exponential", {"rate": _POS}),
                _kind("uniform", {"lo": _NONNEG, "hi": _POS}),
                _kind("weibull", {"shape": _POS, "scale": _POS}),
            ],
        },
        "structure": {"$ref": "#/$defs/structure"},
    },
    "$defs": {
        "intensity": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["constant", "linear", "piecewise"]}},
            "allOf": [
                _kind("constant", {"rate": _NONNEG}),
                _kind("linear", {"base": _NONNEG, "slope": _NUMBER}),
                _kind(
                    "piecewise",
                    {
                        "breakpoints": {"type": "array", "items": _POS},
                        "rates": {"type": "array", "minItems": 1, "items": _NONNEG},
                    },
                ),
            ],
        },
        "structure": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["component", "series", "parallel", "kofn", "bridge", "paths"]}
            },
            "allOf": [
                _kind("component", {"id": _ID}),
                _kind("series", {"children": {"$ref": "#/$defs/children"}}),
                _kind("parallel", {"children": {"$ref": "#/$defs/children"}}),
                _kind(
                    "kofn",
                    {"k": {"type": "integer", "minimum": 1}, "children": {"$ref": "#/$defs/children"}},
                ),
                _kind("bridge", {"ids": {"type": "array", "minItems": 5, "maxItems": 5, "items": _ID}}),
                _kind(
                    "paths",
                    {
                        "sets": {
                            "type": "array",
                            "minItems": 1,
                            "items": {"type": "array", "minItems": 1, "items": _ID},
                        }
                    },
                ),
            ],
        },
        "children": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/structure"}},
    },
}

_VALIDATOR = Draft202012Validator(SCHEMA)


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def _intensity(doc: dict, where: str) -> IntensityFunction:
    try:
        kind = doc["kind"]
        if kind == "constant":
            return Constant(float(doc["rate"]))
        if kind == "linear":
            return Linear(float(doc["base"]), float(doc["slope"]))
        return PiecewiseConstant(tuple(doc["breakpoints"]), tuple(doc["rates"]))
    except ValueError as exc:
        raise ConfigError(str(exc), where) from None


def _service(doc: dict) -> ServiceDistribution:
    try:
        kind = doc["kind"]
        if kind == "exponential":
            return Exponential(float(doc["rate"]))
        if kind == "uniform":
            return Uniform(float(doc["lo"]), float(doc["hi"]))
        return Weibull(float(doc["shape"]), float(doc["scale"]))
    except ValueError as exc:
        raise ConfigError(str(exc), "service") from None


def _structure(doc: dict, where: str) -> StructureExpr:
    kind = doc["kind"]
    if kind == "component":
        return Component(doc["id"])
    if kind == "bridge":
        if len(set(doc["ids"])) != 5:
            raise ConfigError("bridge ids must be distinct", f"{where}.ids")
        return Bridge(tuple(doc["ids"]))
    if kind == "paths":
        return Paths(tuple(frozenset(s) for s in doc["sets"]))
    children = tuple(_structure(c, f"{where}.children[{i}]") for i, c in enumerate(doc["children"]))
    if kind == "series":
        return Series(children)
    if kind == "parallel":
        return Parallel(children)
    if doc["k"] > len(children):
        raise ConfigError(f"k={doc['k']} exceeds the number of children {len(children)}", f"{where}.k")
    return KofN(int(doc["k"]), children)


def parse_config(doc: Any) -> SystemModel:
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        # Report the deepest error first; it names the offending field.
        err = max(errors, key=lambda e: len(e.absolute_path))
        raise ConfigError(err.message, _path(err.absolute_path) or "<root>")

    nodes = []
    for i, n in enumerate(doc["nodes"]):
        nodes.append(
            NodeSpec(
                n["id"],
                _intensity(n["baseline"], f"nodes[{i}].baseline"),
                _intensity(n["intensity"], f"nodes[{i}].intensity"),
            )
        )
    correlator = _intensity(doc["correlator"], "correlator")
    stress_doc = doc["stress"]
    if len(stress_doc["support"]) != len(stress_doc["probs"]):
        raise ConfigError("support and probs must have equal length", "stress.probs")
    try:
        stress = StressDistribution(tuple(stress_doc["support"]), tuple(stress_doc["probs"]))
    except ValueError as exc:
        field = "stress.probs" if "probabilit" in str(exc) else "stress.support"
        raise ConfigError(str(exc), field) from None
    service = _service(doc["service"])
    topology = _structure(doc["structure"], "structure")
    try:
        return SystemModel(tuple(nodes), correlator, stress, service, topology)
    except ValueError as exc:
        field = "nodes" if "unique" in str(exc) else "structure"
        raise ConfigError(str(exc), field) from None


def load_config(path: str | Path) -> SystemModel:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(doc)


def _dump_intensity(f: IntensityFunction) -> dict:
    if isinstance(f, Constant):
        return {"kind": "constant", "rate": f.rate_value}
    if isinstance(f, Linear):
        return {"kind": "linear", "base": f.base, "slope": f.slope}
    if isinstance(f, PiecewiseConstant):
        return {"kind": "piecewise", "breakpoints": list(f.breakpoints), "rates": list(f.rates)}
    if isinstance(f, SumIntensity):
        raise ConfigError("sum intensities have no JSON encoding")
    raise TypeError(f"cannot encode intensity {f!r}")


def _dump_structure(expr: StructureExpr) -> dict:
    if isinstance(expr, Component):
        return {"kind": "component", "id": expr.id}
    if isinstance(expr, Bridge):
        return {"kind": "bridge", "ids": list(expr.ids)}
    if isinstance(expr, Paths):
        return {"kind": "paths", "sets": [sorted(s) for s in expr.sets]}
    children = [_dump_structure(c) for c in expr.children]
    if isinstance(expr, Series):
        return {"kind": "series", "children": children}
    if isinstance(expr, Parallel):
        return {"kind": "parallel", "children": children}
    return {"kind": "kofn", "k": expr.k, "children": children}


def _dump_service(s: ServiceDistribution) -> dict:
    if isinstance(s, Exponential):
        return {"kind": "exponential", "rate": s.rate}
    if isinstance(s, Uniform):
        return {"kind": "uniform", "lo": s.lo, "hi": s.hi}
    return {"kind": "weibull", "shape": s.shape, "scale": s.scale}


def dump_config(model: SystemModel) -> dict:
    return {
        "nodes": [
            {"id": n.id, "baseline": _dump_intensity(n.baseline), "intensity": _dump_intensity(n.private_intensity)}
            for n in model.nodes
        ],
        "correlator": _dump_intensity(model.correlator),
        "stress": {"support": list(model.stress.support), "probs": list(model.stress.probs)},
        "service": _dump_service(model.service),
        "structure": _dump_structure(model.topology),
    }
