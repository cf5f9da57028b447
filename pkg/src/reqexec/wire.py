"""Typed-value encoding shared by the checkpoint format and the HTTP service.

Integer, Real, Boolean and String are kept distinct on the wire; an undefined
value is JSON null. Object references and reference sets round-trip by id.
"""

from __future__ import annotations

from .model import BoolV, IntV, RealV, RefSetV, RefV, StrV, UNDEFINED, Value


class WireFormatError(Exception):
    pass


def encode_value(v: Value) -> object:
    if v is UNDEFINED:
        return None
    if isinstance(v, IntV):
        return {"type": "Integer", "value": v.value}
    if isinstance(v, RealV):
        return {"type": "Real", "value": v.value}
    if isinstance(v, BoolV):
        return {"type": "Boolean", "value": v.value}
    if isinstance(v, StrV):
        return {"type": "String", "value": v.value}
    if isinstance(v, RefV):
        return {"type": "Ref", "value": v.object_id}
    if isinstance(v, RefSetV):
        return {"type": "RefSet", "value": list(v.ids)}
    raise WireFormatError(f"cannot encode {v!r}")


def decode_value(doc: object) -> Value:
    if doc is None:
        return UNDEFINED
    if not isinstance(doc, dict) or "type" not in doc:
        raise WireFormatError(f"not a typed value: {doc!r}")
    t = doc["type"]
    v = doc.get("value")
    if t == "Integer":
        if not isinstance(v, int) or isinstance(v, bool):
            raise WireFormatError(f"bad Integer payload: {v!r}")
        return IntV(v)
    if t == "Real":
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise WireFormatError(f"bad Real payload: {v!r}")
        return RealV(float(v))
    if t == "Boolean":
        if not isinstance(v, bool):
            raise WireFormatError(f"bad Boolean payload: {v!r}")
        return BoolV(v)
    if t == "String":
        if not isinstance(v, str):
            raise WireFormatError(f"bad String payload: {v!r}")
        return StrV(v)
    if t == "Ref":
        if not isinstance(v, int) or isinstance(v, bool):
            raise WireFormatError(f"bad Ref payload: {v!r}")
        return RefV(v)
    if t == "RefSet":
        if not isinstance(v, list) or any(not isinstance(i, int) or isinstance(i, bool) for i in v):
            raise WireFormatError(f"bad RefSet payload: {v!r}")
        return RefSetV(tuple(v))
    raise WireFormatError(f"unknown value type {t!r}")
