"""Runtime execution of compiled operations against an object store.

An invocation snapshots the store, runs the definition plan, checks the guard,
runs the postcondition plan, and reports invariant status. Every outcome other
than Ok restores the snapshot, so failed invocations leave the store (and the
session bindings) byte-identical to the pre-invocation state. Invariants are
evaluated after successful operations and reported, never enforced: a red
invariant is a requirements finding to observe, not a reason to roll back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .decomposer import (
    Add, BindSession, CompiledModel, CompiledOperation, Create, EvalToTemp,
    ExternalCallInstr, FindLinked, FindLinkedMany, FindObject, FindObjects,
    ForEach, GetAttr, Instruction, LinkMany, LinkOne, Release, Return, SetAttr,
    UnlinkMany, UnlinkOne,
)
from .evaluator import EvalContext, EvalFault, evaluate, truthy
from .model import (
    BoolV, IntV, OclExpr, RealV, RefSetV, RefV, StrV, UNDEFINED, Value,
    pp_expr, value_repr,
)
from .resolver import PrimT, RefSetT, RefT, SemanticType
from .store import ObjectStore, StoreError


@dataclass
class Session:
    use_case: str
    bindings: dict[str, Value] = field(default_factory=dict)


@dataclass(frozen=True)
class InvariantStatus:
    name: str
    holds: bool
    witnesses: tuple[int, ...] = ()
    note: str = ""


@dataclass(frozen=True)
class InvariantReport:
    entries: tuple[InvariantStatus, ...]

    @property
    def all_hold(self) -> bool:
        return all(e.holds for e in self.entries)

    def violations(self) -> tuple[InvariantStatus, ...]:
        return tuple(e for e in self.entries if not e.holds)

    def status_of(self, name: str) -> InvariantStatus:
        return next(e for e in self.entries if e.name == name)


@dataclass(frozen=True)
class Ok:
    value: Value
    invariants: InvariantReport


@dataclass(frozen=True)
class PreconditionViolated:
    guard_text: str


@dataclass(frozen=True)
class HookUnbound:
    hook_name: str


@dataclass(frozen=True)
class RuntimeFault:
    message: str


Outcome = Union[Ok, PreconditionViolated, HookUnbound, RuntimeFault]


class InvokeError(Exception):
    """Bad invocation (unknown operation, arity or argument type mismatch);
    raised before any state change."""


HookFn = Callable[[list[Value], ObjectStore], Value]


class HookRegistry:
    def __init__(self) -> None:
        self._hooks: dict[str, HookFn] = {}

    def register(self, name: str, fn: HookFn) -> None:
        self._hooks[name] = fn

    def get(self, name: str) -> Optional[HookFn]:
        return self._hooks.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._hooks


@dataclass
class InvocationTrace:
    """Everything the postcondition oracle needs about a successful invocation."""
    operation: CompiledOperation
    pre_store: ObjectStore
    pre_session: dict[str, Value]
    env: dict[str, Value]
    session: Session
    value: Value


class _HookMissing(Exception):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name


class Executor:
    def __init__(self, compiled: CompiledModel, store: Optional[ObjectStore] = None,
                 hooks: Optional[HookRegistry] = None, tolerance: float = 1e-9):
        self.compiled = compiled
        self.store = store if store is not None else ObjectStore.for_model(
            compiled.resolved, tolerance)
        self.hooks = hooks if hooks is not None else HookRegistry()
        self.last_trace: Optional[InvocationTrace] = None

    # -- sessions -----------------------------------------------------------
    def create_session(self, use_case: str) -> Session:
        if not any(u.name == use_case for u in self.compiled.resolved.use_cases):
            raise InvokeError(f"unknown use case {use_case!r}")
        return Session(use_case)

    # -- invocation ----------------------------------------------------------
    def invoke(self, session: Session, op_name: str, args: list[Value]) -> Outcome:
        op = self.compiled.operations.get((session.use_case, op_name))
        if op is None:
            raise InvokeError(f"use case {session.use_case!r} has no operation {op_name!r}")
        env = self._bind_args(op, args)

        snapshot = self.store.copy()
        pre_session = dict(session.bindings)
        self.last_trace = None

        def rollback() -> None:
            self.store.restore(snapshot)
            session.bindings.clear()
            session.bindings.update(pre_session)

        ctx = EvalContext(store=self.store, env=env, session=session.bindings,
                          pre_store=snapshot, pre_session=pre_session, strict=False)
        try:
            for ins in op.definition_plan:
                self._exec(ins, ctx, op)
        except (EvalFault, StoreError) as err:
            rollback()
            return RuntimeFault(f"definition evaluation failed: {err}")

        if op.guard is not None:
            try:
                ok = evaluate(op.guard, ctx)
            except EvalFault as err:
                rollback()
                return RuntimeFault(f"guard evaluation failed: {err}")
            if not truthy(ok):
                rollback()
                return PreconditionViolated(pp_expr(op.guard))

        ctx.strict = True
        try:
            for ins in op.post_plan:
                self._exec(ins, ctx, op)
        except _HookMissing as miss:
            rollback()
            return HookUnbound(miss.name)
        except (EvalFault, StoreError) as err:
            rollback()
            return RuntimeFault(str(err))

        value = env.get("result", UNDEFINED)
        report = self.check_invariants()
        self.last_trace = InvocationTrace(op, snapshot, pre_session, env, session, value)
        return Ok(value, report)

    def _bind_args(self, op: CompiledOperation, args: list[Value]) -> dict[str, Value]:
        if len(args) != len(op.param_types):
            raise InvokeError(
                f"{op.name} expects {len(op.param_types)} argument(s), got {len(args)}")
        env: dict[str, Value] = {}
        for (pname, ptype), arg in zip(op.param_types, args):
            env[pname] = self._check_arg(op.name, pname, ptype, arg)
        return env

    @staticmethod
    def _check_arg(op: str, pname: str, ptype: SemanticType, arg: Value) -> Value:
        if isinstance(ptype, PrimT):
            want = ptype.name
            if want == "Integer" and isinstance(arg, IntV):
                return arg
            if want == "Real":
                if isinstance(arg, RealV):
                    return arg
                if isinstance(arg, IntV):
                    return RealV(float(arg.value))
            if want == "Boolean" and isinstance(arg, BoolV):
                return arg
            if want == "String" and isinstance(arg, StrV):
                return arg
        elif isinstance(ptype, RefT) and isinstance(arg, RefV):
            return arg
        elif isinstance(ptype, RefSetT) and isinstance(arg, RefSetV):
            return arg
        raise InvokeError(
            f"{op}: argument {pname!r} must be {ptype}, got {value_repr(arg)}")

    # -- instruction interpreter ------------------------------------------------
    def _exec(self, ins: Instruction, ctx: EvalContext, op: CompiledOperation) -> None:
        store = self.store
        env = ctx.env

        if isinstance(ins, FindObject):
            env[ins.dest] = store.find_object(ins.class_name,
                                              self._predicate(ins.bound_var, ins.cond, ctx))
        elif isinstance(ins, FindObjects):
            env[ins.dest] = store.find_objects(ins.class_name,
                                               self._predicate(ins.bound_var, ins.cond, ctx))
        elif isinstance(ins, FindLinked):
            src = evaluate(ins.src, ctx)
            if src is UNDEFINED:
                env[ins.dest] = UNDEFINED
                return
            if not isinstance(src, RefV):
                raise EvalFault("link navigation on a non-object")
            mult = self._role_mult(src, ins.role)
            if mult == "one":
                env[ins.dest] = store.find_linked_object(src, ins.role)
            else:
                found = store.find_linked_objects(
                    src, ins.role, self._predicate(ins.bound_var, ins.cond, ctx))
                env[ins.dest] = RefV(found.ids[0]) if found.ids else UNDEFINED
        elif isinstance(ins, FindLinkedMany):
            src = evaluate(ins.src, ctx)
            if src is UNDEFINED:
                env[ins.dest] = UNDEFINED
                return
            if not isinstance(src, RefV):
                raise EvalFault("link navigation on a non-object")
            env[ins.dest] = store.find_linked_objects(
                src, ins.role, self._predicate(ins.bound_var, ins.cond, ctx))
        elif isinstance(ins, Create):
            env[ins.dest] = store.create_object(ins.class_name)
        elif isinstance(ins, Add):
            store.add_object(ins.class_name, self._ref(ins.src, ctx, "add"))
        elif isinstance(ins, Release):
            target = evaluate(ins.src, ctx)
            if isinstance(target, RefV):
                store.release_object(ins.class_name, target)
        elif isinstance(ins, GetAttr):
            env[ins.dest] = store.get_attribute(self._ref(ins.src, ctx, "read"), ins.attr)
        elif isinstance(ins, SetAttr):
            obj = self._ref(ins.obj, ctx, "set an attribute on")
            store.set_attribute(obj, ins.attr, evaluate(ins.value, ctx))
        elif isinstance(ins, LinkOne):
            store.add_link_one_to_one(self._ref(ins.obj, ctx, "link"), ins.role,
                                      self._ref(ins.target, ctx, "link to"))
        elif isinstance(ins, LinkMany):
            store.add_link_one_to_many(self._ref(ins.obj, ctx, "link"), ins.role,
                                       self._ref(ins.target, ctx, "link to"))
        elif isinstance(ins, UnlinkOne):
            store.remove_link_one_to_one(self._ref(ins.obj, ctx, "unlink"), ins.role)
        elif isinstance(ins, UnlinkMany):
            store.remove_link_one_to_many(self._ref(ins.obj, ctx, "unlink"), ins.role,
                                          self._ref(ins.target, ctx, "unlink from"))
        elif isinstance(ins, ForEach):
            coll = evaluate(ins.collection, ctx)
            if coll is UNDEFINED:
                raise EvalFault("iterating an undefined collection")
            if not isinstance(coll, RefSetV):
                raise EvalFault("iterating a non-collection")
            had = ins.bound_var in env
            saved = env.get(ins.bound_var)
            try:
                for oid in coll.ids:
                    env[ins.bound_var] = RefV(oid)
                    for b in ins.body:
                        self._exec(b, ctx, op)
            finally:
                if had:
                    env[ins.bound_var] = saved  # type: ignore[assignment]
                elif ins.bound_var in env:
                    del env[ins.bound_var]
        elif isinstance(ins, BindSession):
            ctx.session[ins.name] = evaluate(ins.value, ctx)
        elif isinstance(ins, EvalToTemp):
            env[ins.dest] = evaluate(ins.expr, ctx)
        elif isinstance(ins, ExternalCallInstr):
            fn = self.hooks.get(ins.hook_name)
            if fn is None:
                raise _HookMissing(ins.hook_name)
            args = [evaluate(a, ctx) for a in ins.args]
            try:
                result = fn(args, store)
            except Exception as err:  # a faulting hook rolls the operation back
                raise EvalFault(f"hook {ins.hook_name!r} failed: {err}") from None
            if ins.dest is not None:
                if ins.dest_is_session:
                    ctx.session[ins.dest] = result
                else:
                    env[ins.dest] = result
        elif isinstance(ins, Return):
            env["result"] = evaluate(ins.expr, ctx)
        else:
            raise EvalFault(f"unknown instruction {type(ins).__name__}")

    def _predicate(self, bound_var: Optional[str], cond: Optional[OclExpr],
                   ctx: EvalContext):
        if cond is None:
            return None
        var = bound_var or "_it"

        def pred(ref: RefV) -> bool:
            had = var in ctx.env
            saved = ctx.env.get(var)
            ctx.env[var] = ref
            try:
                return truthy(evaluate(cond, ctx))
            finally:
                if had:
                    ctx.env[var] = saved  # type: ignore[assignment]
                else:
                    del ctx.env[var]

        return pred

    def _ref(self, expr: OclExpr, ctx: EvalContext, action: str) -> RefV:
        v = evaluate(expr, ctx)
        if not isinstance(v, RefV):
            raise EvalFault(f"cannot {action} {value_repr(v)}")
        return v

    def _role_mult(self, ref: RefV, role: str) -> str:
        rec = self.store.records.get(ref.object_id)
        if rec is None:
            raise EvalFault(f"navigation on released object #{ref.object_id}")
        info = self.store.schema[rec.class_name].role(role)
        if info is None:
            raise EvalFault(f"{rec.class_name!r} has no role {role!r}")
        return info[1]

    # -- invariants -----------------------------------------------------------
    def check_invariants(self) -> InvariantReport:
        entries = []
        for inv in self.compiled.resolved.invariants:
            if inv.context_class is not None:
                witnesses = []
                note = ""
                for oid in self.store.live_instance_ids(inv.context_class):
                    ctx = EvalContext(store=self.store, env={"self": RefV(oid)},
                                      pre_store=self.store)
                    try:
                        v = evaluate(inv.expr, ctx)
                    except EvalFault as err:
                        witnesses.append(oid)
                        note = f"evaluation fault: {err}"
                        continue
                    if not truthy(v):
                        witnesses.append(oid)
                entries.append(InvariantStatus(inv.name, not witnesses, tuple(witnesses), note))
            else:
                ctx = EvalContext(store=self.store, pre_store=self.store)
                try:
                    v = evaluate(inv.expr, ctx)
                    entries.append(InvariantStatus(inv.name, truthy(v)))
                except EvalFault as err:
                    entries.append(InvariantStatus(inv.name, False, (), f"evaluation fault: {err}"))
        return InvariantReport(tuple(entries))

    # -- postcondition oracle ----------------------------------------------------
    def verify_postcondition(self, trace: Optional[InvocationTrace] = None) -> bool:
        """Evaluate the original postcondition as a predicate over the current
        store, with @pre read from the invocation's pre-state snapshot,
        oclIsNew(x) true iff x was not in the pre-state, and `result` bound to
        the returned value. Only meaningful right after an Ok outcome."""
        t = trace if trace is not None else self.last_trace
        if t is None:
            raise ValueError("no successful invocation to verify")
        if t.operation.postcondition is None:
            return True
        env = dict(t.env)
        env["result"] = t.value
        ctx = EvalContext(store=self.store, env=env, session=t.session.bindings,
                          pre_store=t.pre_store, pre_session=t.pre_session)
        try:
            return truthy(evaluate(t.operation.postcondition, ctx))
        except EvalFault:
            return False
