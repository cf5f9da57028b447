"""Evaluation of resolved OCL expressions against an object store.

Undefined propagates through comparisons and arithmetic, except `x = null`
(an undefinedness check) and `oclIsUndefined()`. Logical connectives use
left-to-right, short-circuiting three-valued logic: a guard whose value is
Undefined counts as not satisfied.

Real equality uses the store's absolute tolerance; the ordering operators
treat tolerance-equal operands as equal, so `-1e-12 >= 0` holds under the
default 1e-9 tolerance.

In strict mode (used while executing compiled plans) arithmetic over
Undefined and division by zero raise EvalFault instead of propagating,
which the executor turns into a rolled-back runtime fault.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .model import (
    AllInstances, And, Any_, Arith, AtPre, AttrNav, AssocNav, BoolLit, BoolV,
    Compare, ExternalCall, Excludes, ForAll, Includes, IntLit, IntV, IsEmpty,
    IsUnique, LetIn, Nav, Not, NullLit, OclExpr, OclIsNew, OclIsTypeOf,
    OclIsUndefined, Or, RealLit, RealV, RefSetV, RefV, ResultRef, Select,
    SelfRef, Size, StrLit, StrV, UNDEFINED, Value, VarRef, value_repr,
)
from .store import ObjectStore, StoreError

TRUE = BoolV(True)
FALSE = BoolV(False)


class EvalFault(Exception):
    pass


@dataclass
class EvalContext:
    store: ObjectStore
    env: dict[str, Value] = field(default_factory=dict)
    session: dict[str, Value] = field(default_factory=dict)
    pre_store: Optional[ObjectStore] = None
    pre_session: Optional[dict[str, Value]] = None
    strict: bool = False

    @property
    def tolerance(self) -> float:
        return self.store.tolerance

    def at_pre(self) -> "EvalContext":
        if self.pre_store is None:
            raise EvalFault("@pre evaluated without a pre-state")
        return EvalContext(
            store=self.pre_store,
            env=self.env,
            session=self.pre_session if self.pre_session is not None else self.session,
            pre_store=self.pre_store,
            pre_session=self.pre_session,
            strict=self.strict,
        )


def values_equal(a: Value, b: Value, tolerance: float) -> bool:
    if a is UNDEFINED or b is UNDEFINED:
        return a is b
    if isinstance(a, (IntV, RealV)) and isinstance(b, (IntV, RealV)):
        if isinstance(a, IntV) and isinstance(b, IntV):
            return a.value == b.value
        return abs(float(a.value) - float(b.value)) <= tolerance
    if type(a) is not type(b):
        return False
    if isinstance(a, RefSetV):
        return a.ids == b.ids
    return a == b


def truthy(v: Value) -> bool:
    return isinstance(v, BoolV) and v.value


def evaluate(e: OclExpr, ctx: EvalContext) -> Value:
    if isinstance(e, IntLit):
        return IntV(e.value)
    if isinstance(e, RealLit):
        return RealV(e.value)
    if isinstance(e, StrLit):
        return StrV(e.value)
    if isinstance(e, BoolLit):
        return BoolV(e.value)
    if isinstance(e, NullLit):
        return UNDEFINED

    if isinstance(e, VarRef):
        if e.kind == "session":
            return ctx.session.get(e.name, UNDEFINED)
        if e.name in ctx.env:
            return ctx.env[e.name]
        return ctx.session.get(e.name, UNDEFINED)

    if isinstance(e, SelfRef):
        return ctx.env.get("self", UNDEFINED)

    if isinstance(e, ResultRef):
        return ctx.env.get("result", UNDEFINED)

    if isinstance(e, AttrNav):
        obj = evaluate(e.obj, ctx)
        if obj is UNDEFINED:
            return UNDEFINED
        if not isinstance(obj, RefV):
            raise EvalFault(f"attribute access on non-object {value_repr(obj)}")
        try:
            return ctx.store.get_attribute(obj, e.attr_name)
        except StoreError as err:
            raise EvalFault(str(err)) from None

    if isinstance(e, Nav):
        # unresolved navigation (ad-hoc expressions): classify dynamically
        obj = evaluate(e.obj, ctx)
        if obj is UNDEFINED:
            return UNDEFINED
        if not isinstance(obj, RefV):
            raise EvalFault(f"navigation on non-object {value_repr(obj)}")
        rec = ctx.store.records.get(obj.object_id)
        if rec is None:
            raise EvalFault(f"navigation on released object #{obj.object_id}")
        info = ctx.store.schema[rec.class_name]
        if info.attr_type(e.name) is not None:
            return ctx.store.get_attribute(obj, e.name)
        if info.role(e.name) is not None:
            return evaluate(AssocNav(e.obj, e.name), ctx)
        raise EvalFault(f"{rec.class_name!r} has no member {e.name!r}")

    if isinstance(e, AssocNav):
        obj = evaluate(e.obj, ctx)
        if obj is UNDEFINED:
            return UNDEFINED
        if not isinstance(obj, RefV):
            raise EvalFault(f"navigation on non-object {value_repr(obj)}")
        rec = ctx.store.records.get(obj.object_id)
        if rec is None:
            raise EvalFault(f"navigation on released object #{obj.object_id}")
        role = ctx.store.schema[rec.class_name].role(e.role_name)
        if role is None:
            raise EvalFault(f"{rec.class_name!r} has no role {e.role_name!r}")
        _tgt, mult = role
        try:
            if mult == "one":
                return ctx.store.find_linked_object(obj, e.role_name)
            return ctx.store.find_linked_objects(obj, e.role_name)
        except StoreError as err:
            raise EvalFault(str(err)) from None

    if isinstance(e, AtPre):
        return evaluate(e.expr, ctx.at_pre())

    if isinstance(e, AllInstances):
        return RefSetV(tuple(ctx.store.live_instance_ids(e.class_name)))

    if isinstance(e, Any_):
        src = evaluate(e.source, ctx)
        if src is UNDEFINED:
            return UNDEFINED
        for oid in _ids(src):
            if truthy(_eval_bound(e.cond, e.bound_var, RefV(oid), ctx)):
                return RefV(oid)
        return UNDEFINED

    if isinstance(e, Select):
        src = evaluate(e.source, ctx)
        if src is UNDEFINED:
            return UNDEFINED
        kept = [oid for oid in _ids(src)
                if truthy(_eval_bound(e.cond, e.bound_var, RefV(oid), ctx))]
        return RefSetV(tuple(kept))

    if isinstance(e, ForAll):
        src = evaluate(e.source, ctx)
        if src is UNDEFINED:
            return UNDEFINED
        saw_undefined = False
        for oid in _ids(src):
            v = _eval_bound(e.body, e.bound_var, RefV(oid), ctx)
            if v is UNDEFINED:
                saw_undefined = True
            elif not truthy(v):
                return FALSE
        return UNDEFINED if saw_undefined else TRUE

    if isinstance(e, (Includes, Excludes)):
        src = evaluate(e.source, ctx)
        arg = evaluate(e.arg, ctx)
        if src is UNDEFINED or arg is UNDEFINED:
            return UNDEFINED
        if not isinstance(arg, RefV):
            raise EvalFault("includes/excludes argument is not an object")
        member = arg.object_id in _ids(src)
        return BoolV(member if isinstance(e, Includes) else not member)

    if isinstance(e, Size):
        src = evaluate(e.source, ctx)
        if src is UNDEFINED:
            return UNDEFINED
        return IntV(len(_ids(src)))

    if isinstance(e, IsEmpty):
        src = evaluate(e.source, ctx)
        if src is UNDEFINED:
            return UNDEFINED
        return BoolV(len(_ids(src)) == 0)

    if isinstance(e, IsUnique):
        seen: list[Value] = []
        for oid in ctx.store.live_instance_ids(e.class_name):
            v = ctx.store.get_attribute(RefV(oid), e.attr_name)
            for prior in seen:
                if values_equal(prior, v, ctx.tolerance):
                    return FALSE
            seen.append(v)
        return TRUE

    if isinstance(e, OclIsUndefined):
        return BoolV(evaluate(e.expr, ctx) is UNDEFINED)

    if isinstance(e, OclIsNew):
        v = evaluate(e.expr, ctx)
        if v is UNDEFINED:
            return UNDEFINED
        if not isinstance(v, RefV):
            raise EvalFault("oclIsNew on a non-object")
        if ctx.pre_store is None:
            raise EvalFault("oclIsNew evaluated without a pre-state")
        return BoolV(v.object_id not in ctx.pre_store.records)

    if isinstance(e, OclIsTypeOf):
        v = evaluate(e.expr, ctx)
        if v is UNDEFINED:
            return UNDEFINED
        if isinstance(v, RefV):
            rec = ctx.store.records.get(v.object_id)
            return BoolV(rec is not None and rec.class_name == e.type_name)
        prim = {IntV: "Integer", RealV: "Real", BoolV: "Boolean", StrV: "String"}.get(type(v))
        return BoolV(prim == e.type_name)

    if isinstance(e, LetIn):
        return evaluate(e.body, ctx)

    if isinstance(e, And):
        left = evaluate(e.left, ctx)
        if left is not UNDEFINED and not truthy(left):
            return FALSE
        right = evaluate(e.right, ctx)
        if right is not UNDEFINED and not truthy(right):
            return FALSE
        if left is UNDEFINED or right is UNDEFINED:
            return UNDEFINED
        return TRUE

    if isinstance(e, Or):
        left = evaluate(e.left, ctx)
        if truthy(left):
            return TRUE
        right = evaluate(e.right, ctx)
        if truthy(right):
            return TRUE
        if left is UNDEFINED or right is UNDEFINED:
            return UNDEFINED
        return FALSE

    if isinstance(e, Not):
        v = evaluate(e.expr, ctx)
        if v is UNDEFINED:
            return UNDEFINED
        return BoolV(not truthy(v))

    if isinstance(e, Compare):
        return _compare(e, ctx)

    if isinstance(e, Arith):
        return _arith(e, ctx)

    if isinstance(e, ExternalCall):
        raise EvalFault(
            f"external call {e.service_name}::{e.op_name} cannot be evaluated as an expression")

    raise EvalFault(f"unhandled expression node {type(e).__name__}")


def _ids(v: Value) -> tuple[int, ...]:
    if isinstance(v, RefSetV):
        return v.ids
    raise EvalFault("expected a collection value")


def _eval_bound(body: OclExpr, var: str, value: Value, ctx: EvalContext) -> Value:
    had = var in ctx.env
    saved = ctx.env.get(var)
    ctx.env[var] = value
    try:
        return evaluate(body, ctx)
    finally:
        if had:
            ctx.env[var] = saved  # type: ignore[assignment]
        else:
            del ctx.env[var]


def _compare(e: Compare, ctx: EvalContext) -> Value:
    null_left = isinstance(e.left, NullLit)
    null_right = isinstance(e.right, NullLit)
    if e.op in ("=", "<>") and (null_left or null_right):
        other = evaluate(e.right if null_left else e.left, ctx)
        is_null = other is UNDEFINED
        return BoolV(is_null if e.op == "=" else not is_null)

    left = evaluate(e.left, ctx)
    right = evaluate(e.right, ctx)
    if left is UNDEFINED or right is UNDEFINED:
        return UNDEFINED

    if e.op in ("=", "<>"):
        eq = values_equal(left, right, ctx.tolerance)
        return BoolV(eq if e.op == "=" else not eq)

    if not isinstance(left, (IntV, RealV)) or not isinstance(right, (IntV, RealV)):
        raise EvalFault(f"ordering comparison over non-numeric values")
    a, b = float(left.value), float(right.value)
    eq = abs(a - b) <= ctx.tolerance
    if e.op == "<":
        return BoolV(a < b and not eq)
    if e.op == "<=":
        return BoolV(a < b or eq)
    if e.op == ">":
        return BoolV(a > b and not eq)
    return BoolV(a > b or eq)


def _arith(e: Arith, ctx: EvalContext) -> Value:
    left = evaluate(e.left, ctx)
    right = evaluate(e.right, ctx)
    if left is UNDEFINED or right is UNDEFINED:
        if ctx.strict:
            raise EvalFault("arithmetic over an undefined value")
        return UNDEFINED
    if not isinstance(left, (IntV, RealV)) or not isinstance(right, (IntV, RealV)):
        raise EvalFault("arithmetic over non-numeric values")
    both_int = isinstance(left, IntV) and isinstance(right, IntV)
    a, b = left.value, right.value
    if e.op == "+":
        r = a + b
    elif e.op == "-":
        r = a - b
    elif e.op == "*":
        r = a * b
    else:
        if b == 0:
            if ctx.strict:
                raise EvalFault("division by zero")
            return UNDEFINED
        return RealV(a / b)
    return IntV(r) if both_int else RealV(float(r))
