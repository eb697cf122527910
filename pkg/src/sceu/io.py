"""JSON file formats for models, representations and preference tables.

Model document::

    {"exogenous": ["U"], "endogenous": ["X", "Y"],
     "ranges": {"U": [0, 1], "X": [0, 1], "Y": [0, 1]},
     "equations": {"X": {"parents": ["U"], "table": {"0": 0, "1": 1}},
                   "Y": {"parents": ["X"], "table": {"0": 0, "1": 1}}}}

Table rows are keyed by the parent values joined with commas, in the order
the parents are listed; a parentless equation has the single row ``""``.

A representation document adds ``prob`` (context key -> rational string) and
``util`` (atom key -> rational string). Context keys list the exogenous
values in declaration order, atom keys list every variable's value in
declaration order (exogenous first).

A preference table document has ``signature`` (the first three model keys),
``actions`` (DSL strings) and ``ranks`` (integers, higher is better, equal
means indifferent).
"""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .core import CausalModel, Equation, ModelError, Signature, SignatureError
from .lang import ParseError, format_action, parse_action
from .prefs import Representation, TablePreference


class InputError(ValueError):
    """A rejected input document; ``where`` names the line or field."""

    def __init__(self, message: str, where: str = "", source: str = ""):
        parts = [p for p in (source, where) if p]
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.where = where
        self.source = source


def key_of(values) -> str:
    return ",".join(str(int(v)) for v in values)


def parse_key(text: str, n: int, where: str) -> tuple[int, ...]:
    if n == 0:
        if text != "":
            raise InputError(f"expected the empty key, got {text!r}", where)
        return ()
    try:
        vals = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise InputError(f"malformed key {text!r}", where) from None
    if len(vals) != n:
        raise InputError(f"key {text!r} has {len(vals)} values, expected {n}", where)
    return vals


def parse_rational(x: Any, where: str) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise InputError(f"expected an integer or a rational string, got {x!r}", where)
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"malformed rational {x!r}", where) from None


def _require(doc: dict, field: str, kind, where: str = ""):
    path = f"{where}.{field}" if where else field
    if field not in doc:
        raise InputError("missing field", path)
    val = doc[field]
    if not isinstance(val, kind):
        raise InputError(f"expected {kind.__name__ if isinstance(kind, type) else 'value'}", path)
    return val


# -- signatures and models -------------------------------------------------------

def signature_from_json(doc: dict, where: str = "") -> Signature:
    if not isinstance(doc, dict):
        raise InputError("expected an object", where or "<root>")
    exo = _require(doc, "exogenous", list, where)
    endo = _require(doc, "endogenous", list, where)
    ranges = _require(doc, "ranges", dict, where)
    pre = f"{where}." if where else ""
    for i, n in enumerate(exo + endo):
        if not isinstance(n, str):
            raise InputError("variable names must be strings", f"{pre}variables[{i}]")
    for n, r in ranges.items():
        if not isinstance(r, list) or not all(isinstance(v, int) and not isinstance(v, bool)
                                              for v in r):
            raise InputError("range must be a list of integers", f"{pre}ranges.{n}")
    try:
        return Signature(exo, endo, ranges)
    except SignatureError as e:
        raise InputError(str(e), f"{pre}ranges") from None


def signature_to_json(sig: Signature) -> dict:
    return {"exogenous": list(sig.exogenous), "endogenous": list(sig.endogenous),
            "ranges": {n: list(sig.ranges[n]) for n in sig.variables}}


def model_from_json(doc: dict) -> CausalModel:
    sig = signature_from_json(doc)
    eqs_doc = _require(doc, "equations", dict)
    eqs = {}
    for name, entry in eqs_doc.items():
        where = f"equations.{name}"
        if name not in sig.index:
            raise InputError("equation for an undeclared variable", where)
        if not sig.is_endogenous(name):
            raise InputError("equation for an exogenous variable", where)
        if not isinstance(entry, dict):
            raise InputError("expected an object", where)
        parents = _require(entry, "parents", list, where)
        for p in parents:
            if p not in sig.index:
                raise InputError(f"unknown parent {p!r}", f"{where}.parents")
        table_doc = _require(entry, "table", dict, where)
        table = {}
        for k, v in table_doc.items():
            row = parse_key(k, len(parents), f"{where}.table[{k!r}]")
            for p, val in zip(parents, row):
                if val not in sig.ranges[p]:
                    raise InputError(f"value {val} of parent {p!r} out of range",
                                     f"{where}.table[{k!r}]")
            if isinstance(v, bool) or not isinstance(v, int):
                raise InputError("table value must be an integer", f"{where}.table[{k!r}]")
            if v not in sig.ranges[name]:
                raise InputError(f"value {v} not in range {list(sig.ranges[name])}",
                                 f"{where}.table[{k!r}]")
            table[row] = v
        eqs[name] = Equation(tuple(parents), table)
    try:
        return CausalModel(sig, eqs)
    except ModelError as e:
        raise InputError(str(e), "equations") from None


def model_to_json(model: CausalModel) -> dict:
    out = signature_to_json(model.signature)
    out["equations"] = {
        name: {"parents": list(eq.parents),
               "table": {key_of(k): v for k, v in sorted(eq.table.items())}}
        for name, eq in model.equations.items()}
    return out


def model_hash(model: CausalModel) -> str:
    blob = json.dumps(model_to_json(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# -- representations ---------------------------------------------------------------

def rep_from_json(doc: dict) -> Representation:
    model = model_from_json(doc)
    sig = model.signature
    prob_doc = _require(doc, "prob", dict)
    util_doc = _require(doc, "util", dict)
    prob = {}
    for k, v in prob_doc.items():
        where = f"prob[{k!r}]"
        u = parse_key(k, len(sig.exogenous), where)
        for n, val in zip(sig.exogenous, u):
            if val not in sig.ranges[n]:
                raise InputError(f"value {val} of {n!r} out of range", where)
        prob[u] = parse_rational(v, where)
    util = {}
    for k, v in util_doc.items():
        where = f"util[{k!r}]"
        a = parse_key(k, len(sig.variables), where)
        for n, val in zip(sig.variables, a):
            if val not in sig.ranges[n]:
                raise InputError(f"value {val} of {n!r} out of range", where)
        util[a] = parse_rational(v, where)
    try:
        return Representation(model, prob, util)
    except (ValueError, SignatureError) as e:
        raise InputError(str(e), "prob/util") from None


def rep_to_json(rep: Representation) -> dict:
    out = model_to_json(rep.model)
    out["prob"] = {key_of(u): str(w) for u, w in rep.prob.items()}
    out["util"] = {key_of(a): str(v) for a, v in rep.util.items()}
    return out


# -- preference tables ---------------------------------------------------------------

def table_from_json(doc: dict) -> TablePreference:
    sig = signature_from_json(_require(doc, "signature", dict), "signature")
    texts = _require(doc, "actions", list)
    ranks = _require(doc, "ranks", list)
    if len(texts) != len(ranks):
        raise InputError(f"{len(texts)} actions but {len(ranks)} ranks", "ranks")
    actions = []
    for i, t in enumerate(texts):
        if not isinstance(t, str):
            raise InputError("action must be a string", f"actions[{i}]")
        try:
            actions.append(parse_action(t, sig))
        except (ParseError, SignatureError) as e:
            raise InputError(str(e), f"actions[{i}]") from None
    for i, r in enumerate(ranks):
        if isinstance(r, bool) or not isinstance(r, int):
            raise InputError("rank must be an integer", f"ranks[{i}]")
    try:
        return TablePreference(sig, actions, ranks)
    except ValueError as e:
        raise InputError(str(e), "actions") from None


def table_to_json(table: TablePreference) -> dict:
    return {"signature": signature_to_json(table.signature),
            "actions": [format_action(a) for a in table.actions],
            "ranks": list(table.ranks)}


# -- documents -------------------------------------------------------------------------

def load_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise InputError(f"cannot read file: {e.strerror}", source=str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(e.msg, f"line {e.lineno} column {e.colno}", str(path)) from None


def classify(doc: Any) -> str:
    if not isinstance(doc, dict):
        raise InputError("expected a JSON object at top level", "<root>")
    if "actions" in doc or "ranks" in doc:
        return "table"
    if "prob" in doc or "util" in doc:
        return "representation"
    if "equations" in doc:
        return "model"
    raise InputError("cannot tell the document kind (no equations, prob/util or actions)",
                     "<root>")


def load_document(path: str | Path):
    """Load and validate any supported file. Returns ``(kind, object)``."""
    doc = load_json(path)
    try:
        kind = classify(doc)
        loader = {"table": table_from_json, "representation": rep_from_json,
                  "model": model_from_json}[kind]
        return kind, loader(doc)
    except InputError as e:
        raise InputError(str(e), source=str(path)) from None


def dumps(obj: Any) -> str:
    """Deterministic JSON text (insertion order kept, newline-terminated)."""
    return json.dumps(obj, indent=2, default=_default) + "\n"


def _default(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj))
