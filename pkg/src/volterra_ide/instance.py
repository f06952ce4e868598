"""Instance files: JSON documents describing a problem, plus optional solver,
oracle, Lyapunov and claimed-bound sections."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import jsonschema

from . import catalog, expr
from .gauge import Disk
from .lyapunov import LyapunovSpec
from .problem import VolterraProblem

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_EXPRS = {"anyOf": [{"type": "string"}, {"type": "array", "items": {"type": "string"}, "minItems": 1}]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "catalog": {"enum": sorted(catalog.CATALOG)},
        "dim": {"type": "integer", "minimum": 1},
        "x0": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "T": _POS,
        "N": _POS,
        "disk": {
            "type": "object",
            "additionalProperties": False,
            "required": ["p", "weights"],
            "properties": {
                "p": {"enum": [1, 2, "inf"]},
                "weights": {"type": "array", "items": _POS, "minItems": 1},
                "radius": _POS,
            },
        },
        "upper_limit_mode": {"enum": ["variable_t", "fixed_T"]},
        "quadrature": {"enum": ["trapezoid", "simpson"]},
        "H": _EXPRS,
        "K": _EXPRS,
        "lyapunov": {
            "type": "object",
            "additionalProperties": False,
            "required": ["V", "g", "S", "S0", "L_V"],
            "properties": {
                "V": {"type": "string"},
                "g": {"type": "string"},
                "S": {"type": "string"},
                "S0": _POS,
                "L_V": _POS,
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "h": _POS,
                "tol": _POS,
                "max_iter": {"type": "integer", "minimum": 1},
                "N": _POS,
                "sigma_policy": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"h_fine": _POS, "tolerance": _POS},
        },
        "claims": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"K0": _NONNEG, "H0": _NONNEG, "k1": _NONNEG, "L": _NONNEG},
        },
    },
    "if": {"not": {"required": ["catalog"]}},
    "then": {"required": ["dim", "x0", "T", "disk", "H", "K"]},
}


class InstanceError(ValueError):
    """Malformed or inconsistent instance document."""


@dataclass
class Instance:
    problem: VolterraProblem
    raw: dict
    lyapunov: LyapunovSpec | None = None
    solver: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    claims: dict = field(default_factory=dict)


def _components(v):
    return [v] if isinstance(v, str) else list(v)


def build(doc: dict) -> Instance:
    """Validate ``doc`` and build the problem (and Lyapunov spec, if any)."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InstanceError(f"schema error at {where}: {exc.message}") from None

    if "catalog" in doc:
        merged = catalog.entry(doc["catalog"])
        for k, v in doc.items():
            if k not in ("H", "K", "catalog"):
                merged[k] = v
        merged.setdefault("name", doc["catalog"])
    else:
        merged = dict(doc)

    dim = merged["dim"]
    H, K = _components(merged["H"]), _components(merged["K"])
    for label, n in (("x0", len(merged["x0"])), ("disk.weights", len(merged["disk"]["weights"])),
                     ("H", len(H)), ("K", len(K))):
        if n != dim:
            raise InstanceError(f"{label} has {n} entries but dim = {dim}")
    try:
        H_fn = expr.compile_map(H, "field", dim)
        K_fn = expr.compile_map(K, "kernel", dim)
        lyap = None
        if "lyapunov" in merged:
            ly = merged["lyapunov"]
            lyap = LyapunovSpec(
                expr.compile_map(ly["V"], "lyapunov_V", dim),
                expr.compile_map(ly["g"], "lyapunov_g", dim),
                expr.compile_map(ly["S"], "lyapunov_S", dim),
                float(ly["S0"]),
                float(ly["L_V"]),
            )
    except (expr.ParseError, expr.IndexRangeError) as exc:
        raise InstanceError(f"expression error: {exc}") from None

    try:
        prob = VolterraProblem(
            H_fn, K_fn, merged["x0"], float(merged["T"]), Disk.from_dict(merged["disk"]),
            N=float(merged.get("N", 1.0)),
            upper_limit_mode=merged.get("upper_limit_mode", "variable_t"),
            quadrature=merged.get("quadrature", "trapezoid"),
            name=merged.get("name", ""),
        )
    except ValueError as exc:
        raise InstanceError(str(exc)) from None
    return Instance(prob, merged, lyap, dict(merged.get("solver", {})), dict(merged.get("oracle", {})),
                    dict(merged.get("claims", {})))


def load(path) -> Instance:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno} "
                            f"(offset {exc.pos}): {exc.msg}") from None
    return build(doc)
