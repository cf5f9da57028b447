"""Compilation of contracts into executable plans.

Each definition clause and each postcondition conjunct is matched against the
transformation-rule table (rules 1..26) and lowered to a primitive-operation
instruction; the precondition is kept whole as a guard predicate for the
expression interpreter but its conjuncts are still classified for the rule
trace. Postcondition conjuncts that no rule covers become external-call hooks,
which is a diagnosis, not an error: the operation is then partially executable
until an implementation is registered for the hook.

Rule sections are disjoint: definitions may only match 1..7, preconditions
8..15, postconditions 16..26.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .model import (
    AllInstances, And, Any_, Arith, AtPre, AttrNav, AssocNav, BoolLit, Compare,
    ExternalCall, Excludes, ForAll, Includes, IntLit, IsEmpty, IsUnique, LetIn,
    Loc, NO_LOC, NullLit, OclExpr, OclIsNew, OclIsTypeOf, OclIsUndefined,
    OperationSignature, RealLit, ResultRef, Select, Size, StrLit, VarRef,
    pp_expr,
)
from .resolver import ResolvedContract, ResolvedModel, SemanticType


class CompileError(Exception):
    def __init__(self, loc: Loc, message: str):
        super().__init__(f"{loc}: {message}")
        self.loc = loc
        self.message = message


# ---------------------------------------------------------------------------
# Instructions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Instruction:
    pass


@dataclass(frozen=True)
class FindObject(Instruction):
    dest: str
    class_name: str
    bound_var: Optional[str]
    cond: Optional[OclExpr]


@dataclass(frozen=True)
class FindObjects(Instruction):
    dest: str
    class_name: str
    bound_var: Optional[str]
    cond: Optional[OclExpr]


@dataclass(frozen=True)
class FindLinked(Instruction):
    """Single linked object: direct read of a one-role, or first match of a
    filtered many-role."""
    dest: str
    src: OclExpr
    role: str
    bound_var: Optional[str] = None
    cond: Optional[OclExpr] = None


@dataclass(frozen=True)
class FindLinkedMany(Instruction):
    dest: str
    src: OclExpr
    role: str
    bound_var: Optional[str] = None
    cond: Optional[OclExpr] = None


@dataclass(frozen=True)
class Create(Instruction):
    dest: str
    class_name: str


@dataclass(frozen=True)
class Add(Instruction):
    class_name: str
    src: OclExpr


@dataclass(frozen=True)
class Release(Instruction):
    class_name: str
    src: OclExpr


@dataclass(frozen=True)
class GetAttr(Instruction):
    dest: str
    src: OclExpr
    attr: str


@dataclass(frozen=True)
class SetAttr(Instruction):
    obj: OclExpr
    attr: str
    value: OclExpr


@dataclass(frozen=True)
class LinkOne(Instruction):
    obj: OclExpr
    role: str
    target: OclExpr


@dataclass(frozen=True)
class LinkMany(Instruction):
    obj: OclExpr
    role: str
    target: OclExpr


@dataclass(frozen=True)
class UnlinkOne(Instruction):
    obj: OclExpr
    role: str


@dataclass(frozen=True)
class UnlinkMany(Instruction):
    obj: OclExpr
    role: str
    target: OclExpr


@dataclass(frozen=True)
class ForEach(Instruction):
    collection: OclExpr
    bound_var: str
    body: tuple[Instruction, ...]


@dataclass(frozen=True)
class BindSession(Instruction):
    name: str
    value: OclExpr


@dataclass(frozen=True)
class EvalToTemp(Instruction):
    dest: str
    expr: OclExpr


@dataclass(frozen=True)
class ExternalCallInstr(Instruction):
    hook_name: str
    args: tuple[OclExpr, ...]
    dest: Optional[str] = None
    dest_is_session: bool = False


@dataclass(frozen=True)
class Return(Instruction):
    expr: OclExpr


@dataclass(frozen=True)
class HookSpec:
    name: str
    arity: int
    origin: Loc
    origin_text: str
    kind: str  # 'service' | 'unmatched'


@dataclass(frozen=True)
class TraceEntry:
    index: int  # global, 1-based across definition/pre/post
    section: str  # 'definition' | 'precondition' | 'postcondition'
    rule: Optional[int]  # None -> not covered by any rule
    session_target: bool
    loc: Loc
    text: str


@dataclass(frozen=True)
class CompiledOperation:
    use_case: str
    signature: OperationSignature
    param_types: tuple[tuple[str, SemanticType], ...]
    return_type: Optional[SemanticType]
    definition_plan: tuple[Instruction, ...]
    guard: Optional[OclExpr]
    post_plan: tuple[Instruction, ...]
    hooks: tuple[HookSpec, ...]
    rule_trace: tuple[TraceEntry, ...]
    postcondition: Optional[OclExpr]
    definitions: tuple[tuple[str, SemanticType, OclExpr], ...]
    synthesized: bool = False

    @property
    def name(self) -> str:
        return self.signature.name

    @property
    def executable(self) -> bool:
        return not self.hooks


@dataclass(frozen=True)
class CompiledModel:
    resolved: ResolvedModel
    operations: dict[tuple[str, str], CompiledOperation]

    def operation(self, use_case: str, name: str) -> CompiledOperation:
        return self.operations[(use_case, name)]

    def in_order(self) -> list[CompiledOperation]:
        out = []
        for uc in self.resolved.use_cases:
            for op in uc.operations:
                out.append(self.operations[(uc.name, op)])
        return out


# ---------------------------------------------------------------------------
# Conjunct splitting
# ---------------------------------------------------------------------------

@dataclass
class Conjunct:
    expr: OclExpr
    lets_opened: list[tuple[str, str]] = field(default_factory=list)


def split_conjuncts(expr: OclExpr) -> list[Conjunct]:
    """Top-level and-split; a let..in attaches to the first conjunct of its
    body and scopes over the rest."""
    if isinstance(expr, And):
        return split_conjuncts(expr.left) + split_conjuncts(expr.right)
    if isinstance(expr, LetIn):
        parts = split_conjuncts(expr.body)
        parts[0].lets_opened.insert(0, (expr.name, expr.class_name))
        return parts
    return [Conjunct(expr)]


# ---------------------------------------------------------------------------
# Rule matching
# ---------------------------------------------------------------------------

def _is_math(e: OclExpr) -> bool:
    if isinstance(e, (IntLit, RealLit, StrLit, BoolLit)):
        return True
    if isinstance(e, (VarRef, AttrNav)):
        return True
    if isinstance(e, AtPre):
        return _is_math(e.expr)
    if isinstance(e, Arith):
        return _is_math(e.left) and _is_math(e.right)
    return False


def _is_literal(e: OclExpr) -> bool:
    return isinstance(e, (IntLit, RealLit, StrLit, BoolLit, NullLit))


def _one_role(e: OclExpr) -> bool:
    return isinstance(e, AssocNav) and e.multiplicity == "one"


def _many_role(e: OclExpr) -> bool:
    return isinstance(e, AssocNav) and e.multiplicity == "many"


def match_rule(conjunct: OclExpr, section: str,
               let_names: Optional[set[str]] = None) -> Optional[int]:
    """Rule id (1..26) for one conjunct of the given section, or None.

    `section` is one of 'definition', 'pre', 'post'. For definitions the
    conjunct is the right-hand side of the binding clause.
    """
    let_names = let_names or set()

    if section == "definition":
        if isinstance(conjunct, AllInstances):
            return 1
        if isinstance(conjunct, Select) and isinstance(conjunct.source, AllInstances):
            return 2
        if isinstance(conjunct, Any_) and isinstance(conjunct.source, AllInstances):
            return 3
        if _one_role(conjunct):
            return 4
        if _many_role(conjunct):
            return 5
        if isinstance(conjunct, Select) and _many_role(conjunct.source):
            return 6
        if isinstance(conjunct, Any_) and _many_role(conjunct.source):
            return 7
        return None

    if section == "pre":
        if isinstance(conjunct, Compare) and conjunct.op == "=":
            l, r = conjunct.left, conjunct.right
            if isinstance(l, OclIsUndefined) and isinstance(r, BoolLit):
                return 8
            if isinstance(r, OclIsUndefined) and isinstance(l, BoolLit):
                return 8
            if isinstance(l, IsEmpty) and isinstance(r, BoolLit):
                return 10
            if isinstance(r, IsEmpty) and isinstance(l, BoolLit):
                return 10
        if isinstance(conjunct, OclIsTypeOf):
            return 9
        if isinstance(conjunct, Compare):
            l, r = conjunct.left, conjunct.right
            if isinstance(l, Size) and _is_math(r):
                return 11
            if isinstance(r, Size) and _is_math(l):
                return 11
            if _is_math(l) and _is_math(r):
                return 12
        if isinstance(conjunct, Includes) and isinstance(conjunct.source, AllInstances):
            return 13
        if isinstance(conjunct, Excludes) and isinstance(conjunct.source, AllInstances):
            return 14
        if isinstance(conjunct, IsUnique):
            return 15
        return None

    if section == "post":
        if isinstance(conjunct, OclIsNew) and isinstance(conjunct.expr, VarRef) \
                and conjunct.expr.name in let_names:
            return 16
        if isinstance(conjunct, Includes):
            if isinstance(conjunct.source, AllInstances):
                return 17
            if _many_role(conjunct.source):
                return 19
        if isinstance(conjunct, Excludes):
            if isinstance(conjunct.source, AllInstances):
                return 18
            if _many_role(conjunct.source):
                return 20
        if isinstance(conjunct, ExternalCall):
            return 26
        if isinstance(conjunct, Compare) and conjunct.op == "=":
            l, r = conjunct.left, conjunct.right
            if isinstance(r, ExternalCall) and (
                    isinstance(l, ResultRef)
                    or (isinstance(l, VarRef) and l.kind == "session")):
                return 26
            if _one_role(l) and isinstance(r, NullLit):
                return 22
            if _one_role(l) and not isinstance(r, NullLit):
                return 21
            if isinstance(l, VarRef) and l.kind == "session":
                return 21
            if isinstance(l, AttrNav):
                return 23
            if isinstance(l, ResultRef):
                return 25
        if isinstance(conjunct, ForAll):
            body = conjunct.body
            if isinstance(body, Compare) and body.op == "=" \
                    and isinstance(body.left, AttrNav) \
                    and isinstance(body.left.obj, VarRef) \
                    and body.left.obj.name == conjunct.bound_var:
                return 24
        return None

    raise ValueError(f"unknown section {section!r}")


# ---------------------------------------------------------------------------
# Contract compilation
# ---------------------------------------------------------------------------

def compile_contract(rc: ResolvedContract, resolved: ResolvedModel) -> CompiledOperation:
    trace: list[TraceEntry] = []
    hooks: list[HookSpec] = []
    index = 0

    def add_trace(section: str, rule: Optional[int], loc: Loc, text: str,
                  session_target: bool = False) -> None:
        nonlocal index
        index += 1
        trace.append(TraceEntry(index, section, rule, session_target, loc, text))

    # definitions -> find instructions
    def_plan: list[Instruction] = []
    for (name, _dt, expr) in rc.definitions:
        rule = match_rule(expr, "definition")
        add_trace("definition", rule, expr.loc, f"{name} = {pp_expr(expr)}")
        if rule == 1:
            def_plan.append(FindObjects(name, expr.class_name, None, None))
        elif rule == 2:
            def_plan.append(FindObjects(name, expr.source.class_name, expr.bound_var, expr.cond))
        elif rule == 3:
            def_plan.append(FindObject(name, expr.source.class_name, expr.bound_var, expr.cond))
        elif rule == 4:
            def_plan.append(FindLinked(name, expr.obj, expr.role_name))
        elif rule == 5:
            def_plan.append(FindLinkedMany(name, expr.obj, expr.role_name))
        elif rule == 6:
            def_plan.append(FindLinkedMany(name, expr.source.obj, expr.source.role_name,
                                           expr.bound_var, expr.cond))
        elif rule == 7:
            def_plan.append(FindLinked(name, expr.source.obj, expr.source.role_name,
                                       expr.bound_var, expr.cond))
        else:
            def_plan.append(EvalToTemp(name, expr))

    # precondition -> guard, conjuncts classified for the trace only
    guard = rc.precondition
    if guard is not None:
        for c in split_conjuncts(guard):
            if c.lets_opened:
                raise CompileError(c.expr.loc, "let..in is not allowed in a precondition")
            rule = match_rule(c.expr, "pre")
            add_trace("precondition", rule, c.expr.loc, pp_expr(c.expr))

    # postcondition -> instruction plan
    post_plan: list[Instruction] = []
    let_types: dict[str, str] = {}
    created: set[str] = set()
    op_key = f"{rc.use_case}_{rc.name}"
    post_index = 0
    if rc.postcondition is not None:
        conjuncts = split_conjuncts(rc.postcondition)
        for c in conjuncts:
            for (ln, lc) in c.lets_opened:
                if ln in let_types:
                    raise CompileError(c.expr.loc, f"let binding {ln!r} opened twice")
                let_types[ln] = lc
        for c in conjuncts:
            post_index += 1
            e = c.expr
            rule = match_rule(e, "post", set(let_types))
            session_target = False
            if rule == 16:
                name = e.expr.name
                post_plan.append(Create(name, let_types[name]))
                created.add(name)
            elif rule == 17:
                post_plan.append(Add(e.source.class_name, e.arg))
            elif rule == 18:
                post_plan.append(Release(e.source.class_name, e.arg))
            elif rule == 19:
                post_plan.append(LinkMany(e.source.obj, e.source.role_name, e.arg))
            elif rule == 20:
                post_plan.append(UnlinkMany(e.source.obj, e.source.role_name, e.arg))
            elif rule == 21:
                if isinstance(e.left, VarRef):
                    session_target = True
                    post_plan.append(BindSession(e.left.name, e.right))
                else:
                    post_plan.append(LinkOne(e.left.obj, e.left.role_name, e.right))
            elif rule == 22:
                post_plan.append(UnlinkOne(e.left.obj, e.left.role_name))
            elif rule == 23:
                post_plan.append(SetAttr(e.left.obj, e.left.attr_name, e.right))
            elif rule == 24:
                body = SetAttr(VarRef(e.bound_var, "bound"), e.body.left.attr_name, e.body.right)
                post_plan.append(ForEach(e.source, e.bound_var, (body,)))
            elif rule == 25:
                post_plan.append(Return(e.right))
            elif rule == 26:
                call = e if isinstance(e, ExternalCall) else e.right
                hook_name = f"{call.service_name}_{call.op_name}"
                hooks.append(HookSpec(hook_name, len(call.args), e.loc, pp_expr(e), "service"))
                if isinstance(e, ExternalCall):
                    post_plan.append(ExternalCallInstr(hook_name, call.args))
                elif isinstance(e.left, ResultRef):
                    post_plan.append(ExternalCallInstr(hook_name, call.args, dest="result"))
                    post_plan.append(Return(VarRef("result", "temp")))
                else:
                    post_plan.append(ExternalCallInstr(hook_name, call.args,
                                                       dest=e.left.name, dest_is_session=True))
            else:
                if isinstance(e, Compare) and e.op == "=" and _is_literal(e.left) and _is_literal(e.right):
                    raise CompileError(
                        e.loc, f"ambiguous equality between literals: {pp_expr(e)}")
                hook_name = f"hook_{op_key}_{post_index}"
                hooks.append(HookSpec(hook_name, 0, e.loc, pp_expr(e), "unmatched"))
                dest = None
                dest_session = False
                if isinstance(e, Compare) and e.op == "=" and isinstance(e.left, VarRef) \
                        and e.left.kind == "session":
                    dest = e.left.name
                    dest_session = True
                post_plan.append(ExternalCallInstr(hook_name, (), dest=dest,
                                                   dest_is_session=dest_session))
            add_trace("postcondition", rule, e.loc, pp_expr(e), session_target)

    op = CompiledOperation(
        use_case=rc.use_case,
        signature=rc.signature,
        param_types=rc.param_types,
        return_type=rc.return_type,
        definition_plan=tuple(def_plan),
        guard=guard,
        post_plan=tuple(post_plan),
        hooks=tuple(hooks),
        rule_trace=tuple(trace),
        postcondition=rc.postcondition,
        definitions=rc.definitions,
        synthesized=rc.synthesized,
    )
    _check_writes_before_reads(op)
    return op


def _collect_reads(e: OclExpr, into: set[str]) -> None:
    if isinstance(e, VarRef):
        if e.kind in ("let", "temp"):
            into.add(e.name)
        return
    for f in getattr(e, "__dataclass_fields__", {}):
        v = getattr(e, f)
        if isinstance(v, OclExpr):
            _collect_reads(v, into)
        elif isinstance(v, tuple):
            for item in v:
                if isinstance(item, OclExpr):
                    _collect_reads(item, into)


def _instruction_reads(ins: Instruction) -> set[str]:
    reads: set[str] = set()
    for f in getattr(ins, "__dataclass_fields__", {}):
        v = getattr(ins, f)
        if isinstance(v, OclExpr):
            _collect_reads(v, reads)
        elif isinstance(v, tuple):
            for item in v:
                if isinstance(item, OclExpr):
                    _collect_reads(item, reads)
                elif isinstance(item, Instruction):
                    reads |= _instruction_reads(item)
    return reads


def _check_writes_before_reads(op: CompiledOperation) -> None:
    """Let- and temp-bound names must be written before any instruction reads
    them; a forward reference to a let binding is a compile error."""
    written: set[str] = {n for (n, _t, _e) in op.definitions}
    for ins in list(op.definition_plan) + list(op.post_plan):
        missing = _instruction_reads(ins) - written
        if missing:
            name = sorted(missing)[0]
            raise CompileError(NO_LOC, f"forward reference to {name!r} before it is bound")
        for attr in ("dest", "name"):
            d = getattr(ins, attr, None)
            if isinstance(d, str):
                written.add(d)
    # ForEach bodies may only mutate state, mirroring the loop rule's shape.
    for ins in op.post_plan:
        if isinstance(ins, ForEach):
            for b in ins.body:
                if not isinstance(b, (SetAttr, LinkOne, LinkMany, UnlinkOne, UnlinkMany, EvalToTemp)):
                    raise CompileError(NO_LOC, "loop bodies may only set attributes or links")


def compile_model(resolved: ResolvedModel) -> CompiledModel:
    ops: dict[tuple[str, str], CompiledOperation] = {}
    for uc in resolved.use_cases:
        for opname in uc.operations:
            rc = resolved.contracts[(uc.name, opname)]
            ops[(uc.name, opname)] = compile_contract(rc, resolved)
    return CompiledModel(resolved, ops)


# ---------------------------------------------------------------------------
# Executability analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperationStatus:
    use_case: str
    operation: str
    status: str  # 'executable' | 'partially_executable'
    hooks: tuple[str, ...]


@dataclass(frozen=True)
class ExecutabilityReport:
    operations: tuple[OperationStatus, ...]
    total: int
    executable: int

    @property
    def success_rate(self) -> float:
        if self.total == 0:
            return 100.0
        return self.executable / self.total * 100.0


def analyze_executability(compiled: CompiledModel) -> ExecutabilityReport:
    statuses = []
    executable = 0
    for op in compiled.in_order():
        if op.executable:
            executable += 1
            statuses.append(OperationStatus(op.use_case, op.name, "executable", ()))
        else:
            statuses.append(OperationStatus(op.use_case, op.name, "partially_executable",
                                            tuple(h.name for h in op.hooks)))
    return ExecutabilityReport(tuple(statuses), len(statuses), executable)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def render_trace(op: CompiledOperation) -> str:
    lines = [f"{op.use_case}::{op.name}"]
    for t in op.rule_trace:
        rid = f"R{t.rule}" if t.rule is not None else "HOOK"
        if t.session_target:
            rid += "[session]"
        lines.append(f"#{t.index} {rid} {t.loc}")
    return "\n".join(lines) + "\n"


def render_instruction(ins: Instruction) -> str:
    if isinstance(ins, FindObject):
        cond = f" where {ins.bound_var} | {pp_expr(ins.cond)}" if ins.cond is not None else ""
        return f"FIND_OBJECT {ins.dest} : {ins.class_name}{cond}"
    if isinstance(ins, FindObjects):
        cond = f" where {ins.bound_var} | {pp_expr(ins.cond)}" if ins.cond is not None else ""
        return f"FIND_OBJECTS {ins.dest} : {ins.class_name}{cond}"
    if isinstance(ins, FindLinked):
        cond = f" where {ins.bound_var} | {pp_expr(ins.cond)}" if ins.cond is not None else ""
        return f"FIND_LINKED {ins.dest} <- {pp_expr(ins.src)}.{ins.role}{cond}"
    if isinstance(ins, FindLinkedMany):
        cond = f" where {ins.bound_var} | {pp_expr(ins.cond)}" if ins.cond is not None else ""
        return f"FIND_LINKED_MANY {ins.dest} <- {pp_expr(ins.src)}.{ins.role}{cond}"
    if isinstance(ins, Create):
        return f"CREATE {ins.dest} : {ins.class_name}"
    if isinstance(ins, Add):
        return f"ADD {ins.class_name} {pp_expr(ins.src)}"
    if isinstance(ins, Release):
        return f"RELEASE {ins.class_name} {pp_expr(ins.src)}"
    if isinstance(ins, GetAttr):
        return f"GET_ATTR {ins.dest} <- {pp_expr(ins.src)}.{ins.attr}"
    if isinstance(ins, SetAttr):
        return f"SET_ATTR {pp_expr(ins.obj)}.{ins.attr} <- {pp_expr(ins.value)}"
    if isinstance(ins, LinkOne):
        return f"LINK_ONE {pp_expr(ins.obj)}.{ins.role} <- {pp_expr(ins.target)}"
    if isinstance(ins, LinkMany):
        return f"LINK_MANY {pp_expr(ins.obj)}.{ins.role} <- {pp_expr(ins.target)}"
    if isinstance(ins, UnlinkOne):
        return f"UNLINK_ONE {pp_expr(ins.obj)}.{ins.role}"
    if isinstance(ins, UnlinkMany):
        return f"UNLINK_MANY {pp_expr(ins.obj)}.{ins.role} -> {pp_expr(ins.target)}"
    if isinstance(ins, ForEach):
        inner = "; ".join(render_instruction(b) for b in ins.body)
        return f"FOR_EACH {ins.bound_var} IN {pp_expr(ins.collection)} {{ {inner} }}"
    if isinstance(ins, BindSession):
        return f"BIND_SESSION {ins.name} <- {pp_expr(ins.value)}"
    if isinstance(ins, EvalToTemp):
        return f"EVAL {ins.dest} <- {pp_expr(ins.expr)}"
    if isinstance(ins, ExternalCallInstr):
        args = ", ".join(pp_expr(a) for a in ins.args)
        dest = f"{ins.dest} <- " if ins.dest else ""
        return f"EXTERNAL_CALL {dest}{ins.hook_name}({args})"
    if isinstance(ins, Return):
        return f"RETURN {pp_expr(ins.expr)}"
    raise TypeError(f"cannot render {ins!r}")


def render_plan(op: CompiledOperation) -> str:
    lines = [f"{op.use_case}::{op.name}"]
    if op.definition_plan:
        lines.append("definition plan:")
        for i, ins in enumerate(op.definition_plan, 1):
            lines.append(f"  {i} {render_instruction(ins)}")
    if op.guard is not None:
        lines.append(f"guard: {pp_expr(op.guard)}")
    lines.append("plan:")
    for i, ins in enumerate(op.post_plan, 1):
        lines.append(f"  {i} {render_instruction(ins)}")
    return "\n".join(lines) + "\n"
