"""JSON formats: LP export, solution dumps and ingested correlation tables."""

from __future__ import annotations

import json

import jsonschema
import numpy as np

from nsqkd.exceptions import SchemaError
from nsqkd.lp_builder import LpInstance
from nsqkd.protocol import CorrelationTable, require_valid

_num_array = {"type": "array", "items": {"type": "number"}}

LP_SCHEMA = {
    "type": "object",
    "required": ["num_vars", "var_names", "objective", "equalities", "bounds", "metadata"],
    "properties": {
        "num_vars": {"type": "integer", "minimum": 0},
        "var_names": {"type": "array", "items": {"type": "string"}},
        "objective": {
            "type": "object",
            "required": ["coeffs", "constant"],
            "properties": {"coeffs": _num_array, "constant": {"type": "number"}},
        },
        "equalities": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["coeffs", "rhs"],
                "properties": {
                    "coeffs": _num_array,
                    "rhs": {"type": "number"},
                    "label": {"type": "string"},
                },
            },
        },
        "bounds": {
            "type": "object",
            "required": ["lower", "upper"],
            "properties": {"lower": _num_array, "upper": _num_array},
        },
        "metadata": {
            "type": "object",
            "required": ["p", "form"],
            "properties": {
                "p": {"type": ["number", "null"]},
                "form": {"type": "string"},
            },
        },
    },
}

SOLUTION_SCHEMA = {
    "type": "object",
    "required": ["status", "value", "primal", "dual_eq", "reduced_costs", "basis", "iterations"],
    "properties": {
        "status": {"enum": ["optimal", "infeasible", "unbounded"]},
        "iterations": {"type": "integer"},
        "basis": {"type": "array", "items": {"enum": ["basic", "at-lower", "at-upper"]}},
    },
}

TABLE_SCHEMA = {
    "type": "object",
    "required": ["settings"],
    "properties": {
        "settings": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["x", "y", "probs"],
                "properties": {
                    "x": {"type": "integer", "minimum": 0, "maximum": 2},
                    "y": {"type": "integer", "minimum": 0, "maximum": 1},
                    "probs": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}},
                    },
                },
            },
        }
    },
}


def _check(doc, schema, what):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{what}: field {path}: {exc.message}") from None


def _loads(text, what):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{what}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def lp_to_json_dict(inst):
    return {
        "num_vars": inst.num_vars,
        "var_names": list(inst.var_names),
        "objective": {"coeffs": inst.objective.tolist(), "constant": inst.constant},
        "equalities": [
            {"coeffs": row.tolist(), "rhs": float(rhs), "label": label}
            for row, rhs, label in zip(inst.A_eq, inst.b_eq, inst.row_labels)
        ],
        "bounds": {"lower": inst.lower.tolist(), "upper": inst.upper.tolist()},
        "metadata": {"p": inst.p, "form": inst.form},
    }


def lp_from_json_dict(doc):
    _check(doc, LP_SCHEMA, "LP file")
    n = doc["num_vars"]
    eqs = doc["equalities"]
    for name, arr in (
        ("var_names", doc["var_names"]),
        ("objective/coeffs", doc["objective"]["coeffs"]),
        ("bounds/lower", doc["bounds"]["lower"]),
        ("bounds/upper", doc["bounds"]["upper"]),
    ):
        if len(arr) != n:
            raise SchemaError(f"LP file: field {name}: expected {n} entries, got {len(arr)}")
    for i, row in enumerate(eqs):
        if len(row["coeffs"]) != n:
            raise SchemaError(f"LP file: field equalities/{i}/coeffs: expected {n} entries")
    try:
        return LpInstance(
            objective=np.array(doc["objective"]["coeffs"], dtype=float),
            constant=doc["objective"]["constant"],
            A_eq=np.array([row["coeffs"] for row in eqs], dtype=float).reshape(len(eqs), n),
            b_eq=np.array([row["rhs"] for row in eqs], dtype=float),
            lower=np.array(doc["bounds"]["lower"], dtype=float),
            upper=np.array(doc["bounds"]["upper"], dtype=float),
            form=doc["metadata"]["form"],
            var_names=tuple(doc["var_names"]),
            row_labels=tuple(row.get("label", f"r{i}") for i, row in enumerate(eqs)),
            p=doc["metadata"]["p"],
        )
    except ValueError as exc:
        raise SchemaError(f"LP file: {exc}") from None


def dump_lp(inst):
    return json.dumps(lp_to_json_dict(inst), indent=1)


def load_lp(text):
    return lp_from_json_dict(_loads(text, "LP file"))


def solution_from_json_dict(doc):
    from nsqkd.simplex import LpSolution

    _check(doc, SOLUTION_SCHEMA, "solution file")

    def arr(v):
        return None if v is None else np.array(v, dtype=float)

    return LpSolution(
        status=doc["status"],
        value=float(doc["value"]),
        primal=arr(doc["primal"]),
        dual_eq=arr(doc["dual_eq"]),
        reduced_costs=arr(doc["reduced_costs"]),
        basis=list(doc["basis"]),
        iterations=doc["iterations"],
    )


def parse_table(text, source="ingested", validate=True):
    """Parse and (by default) validate a correlation table document.

    Raises :class:`SchemaError` on malformed JSON or schema violations,
    ``TableStructureError`` on missing/duplicate setting pairs and
    ``TableValidationError`` when the numbers are not a no-signaling
    distribution.
    """
    doc = _loads(text, "table file")
    _check(doc, TABLE_SCHEMA, "table file")
    t = CorrelationTable.from_json_dict(doc, source=source)
    if validate:
        require_valid(t)
    return t


def load_table(path, validate=True):
    with open(path, encoding="utf-8") as fh:
        return parse_table(fh.read(), source=str(path), validate=validate)
