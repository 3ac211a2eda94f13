"""JSON encoding of package objects.

Floats are written with 17 significant digits so that reports are
byte-identical across runs and round-trip exactly; non-finite floats become
the strings ``"inf"``, ``"-inf"`` and ``"nan"``.  Every top-level report
carries ``"schema": 1``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Any

import numpy as np

from .core import (
    Hypothesis,
    MomentVector,
    MultiIndex,
    Polynomial,
    SlackSchedule,
    TesterReport,
    Violation,
)
from .distributions import (
    Concept,
    FunctionOfHalfspaces,
    Halfspace,
    LookupTable,
    Parity,
)

SCHEMA = 1


# ----------------------------------------------------------------------------
# emitter


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        return "0.0"
    text = f"{x:.17g}"
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def _emit(obj, out: list, indent: int | None, level: int) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        pad, inner = _pads(indent, level)
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            out.append(("," if i else "") + inner + json.dumps(str(k)) + ": ")
            _emit(v, out, indent, level + 1)
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if not len(seq):
            out.append("[]")
            return
        pad, inner = _pads(indent, level)
        out.append("[")
        for i, v in enumerate(seq):
            out.append(("," if i else "") + inner)
            _emit(v, out, indent, level + 1)
        out.append(pad + "]")
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def _pads(indent, level):
    if indent is None:
        return "", ""
    return "\n" + " " * (indent * level), "\n" + " " * (indent * (level + 1))


def dumps(obj, indent: int | None = 2) -> str:
    """Serialize plain data (after ``to_jsonable``) with fixed float formatting."""
    out: list[str] = []
    _emit(to_jsonable(obj), out, indent, 0)
    return "".join(out)


def loads(text: str):
    return json.loads(text)


def parse_float(value) -> float:
    if isinstance(value, str):
        return float(value)  # "inf", "-inf", "nan"
    return float(value)


# ----------------------------------------------------------------------------
# object encoders


def _entries(mapping) -> dict:
    return {MultiIndex(I).key(): float(v) for I, v in mapping.items()}


def _parse_entries(obj: dict) -> dict:
    return {MultiIndex.parse(k): parse_float(v) for k, v in obj.items()}


def moment_vector_to_dict(mv: MomentVector) -> dict:
    return {"schema": SCHEMA, "type": "moment_vector", "degree": mv.degree_bound,
            "dimension": mv.dimension, "multilinear": mv.multilinear, "entries": _entries(mv.entries)}


def moment_vector_from_dict(obj: dict) -> MomentVector:
    return MomentVector(int(obj["degree"]), int(obj["dimension"]), _parse_entries(obj["entries"]),
                        bool(obj.get("multilinear", False)))


def slack_to_dict(s: SlackSchedule) -> dict:
    return {"schema": SCHEMA, "type": "slack_schedule", "degree": s.degree_bound, "dimension": s.dimension,
            "multilinear": s.multilinear, "provenance": s.provenance, "params": to_jsonable(dict(s.params)),
            "entries": _entries(s.entries)}


def slack_from_dict(obj: dict) -> SlackSchedule:
    return SlackSchedule(int(obj["degree"]), int(obj["dimension"]), _parse_entries(obj["entries"]),
                         bool(obj.get("multilinear", False)), obj.get("provenance", "custom"),
                         dict(obj.get("params", {})))


def polynomial_to_dict(p: Polynomial) -> dict:
    return {"schema": SCHEMA, "type": "polynomial", "degree": p.degree_bound, "dimension": p.dimension,
            "coefficients": _entries(p.coefficients)}


def polynomial_from_dict(obj: dict) -> Polynomial:
    return Polynomial(int(obj["degree"]), int(obj["dimension"]), _parse_entries(obj["coefficients"]))


def hypothesis_to_dict(h: Hypothesis) -> dict:
    p = h.polynomial
    return {"schema": SCHEMA, "type": "hypothesis", "degree": p.degree_bound, "dimension": p.dimension,
            "threshold": float(h.threshold), "coefficients": _entries(p.coefficients)}


def hypothesis_from_dict(obj: dict) -> Hypothesis:
    if obj.get("type") != "hypothesis":
        raise ValueError("not a hypothesis document")
    return Hypothesis(polynomial_from_dict(obj), parse_float(obj["threshold"]))


def tester_report_to_dict(r: TesterReport) -> dict:
    return {
        "schema": SCHEMA, "type": "tester_report", "accepted": r.accepted,
        "max_violation_ratio": float(r.max_violation_ratio),
        "violations": [{"index": v.index.key(), "empirical": v.empirical, "target": v.target, "slack": v.slack}
                       for v in r.violations],
    }


def tester_report_from_dict(obj: dict) -> TesterReport:
    viol = tuple(Violation(MultiIndex.parse(v["index"]), parse_float(v["empirical"]), parse_float(v["target"]),
                           parse_float(v["slack"])) for v in obj["violations"])
    return TesterReport(bool(obj["accepted"]), viol, parse_float(obj["max_violation_ratio"]))


def concept_to_dict(c: Concept) -> dict:
    if isinstance(c, Halfspace):
        return {"kind": "halfspace", "w": c.w.tolist(), "theta": c.theta}
    if isinstance(c, Parity):
        return {"kind": "parity", "subset": list(c.subset), "dimension": c.dimension}
    if isinstance(c, FunctionOfHalfspaces):
        return {"kind": "function_of_halfspaces", "W": c.W.tolist(), "theta": c.theta.tolist(),
                "table": c.table_bits()}
    if isinstance(c, LookupTable):
        return {"kind": "lookup_table", "points": c.points.tolist(), "labels": c.labels.tolist(),
                "default": c.default}
    raise TypeError(f"no encoding for {type(c).__name__}")


def concept_from_dict(obj: dict) -> Concept:
    kind = obj["kind"]
    if kind == "halfspace":
        return Halfspace(np.asarray(obj["w"], dtype=np.float64), parse_float(obj["theta"]))
    if kind == "parity":
        return Parity(tuple(obj["subset"]), int(obj["dimension"]))
    if kind == "function_of_halfspaces":
        return FunctionOfHalfspaces.from_bits(obj["W"], obj["theta"], obj["table"])
    if kind == "lookup_table":
        return LookupTable(obj["points"], obj["labels"], int(obj.get("default", 1)))
    raise ValueError(f"unknown concept kind {kind!r}")


def duality_certificate(primal, dual, gap: float) -> dict:
    """``{primal: {weights}, dual: {coefficients}, gap, pointwise_slack}``."""
    return {
        "schema": SCHEMA, "type": "duality_certificate",
        "primal": {"weights": np.asarray(primal.weights).tolist(), "objective": primal.objective},
        "dual": {"direction": dual.direction, "objective": dual.objective,
                 "coefficients": _entries(dual.polynomial.coefficients)},
        "gap": float(gap), "pointwise_slack": float(dual.pointwise_slack),
    }


_ENCODERS = {
    MomentVector: moment_vector_to_dict,
    SlackSchedule: slack_to_dict,
    Polynomial: polynomial_to_dict,
    Hypothesis: hypothesis_to_dict,
    TesterReport: tester_report_to_dict,
}


def to_jsonable(obj: Any):
    """Recursively convert package objects, dataclasses and numpy values into JSON-ready data."""
    for cls, enc in _ENCODERS.items():
        if isinstance(obj, cls):
            return enc(obj)
    if isinstance(obj, Concept):
        return concept_to_dict(obj)
    if isinstance(obj, MultiIndex):
        return obj.key()
    if isinstance(obj, dict):
        return {(k.key() if isinstance(k, MultiIndex) else str(k)): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    return obj
