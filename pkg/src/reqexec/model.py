"""Core data types: the requirements model, the OCL expression AST, and runtime values.

Everything here is immutable after construction and safe to share across threads.
Source locations ride along on every AST node but never participate in equality,
so a parse -> pretty-print -> parse round trip compares structurally equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

PRIM_TYPES = ("Integer", "Real", "Boolean", "String")


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NO_LOC = Loc(0, 0)


# ---------------------------------------------------------------------------
# OCL expression AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OclExpr:
    loc: Loc = field(compare=False, repr=False, kw_only=True, default=NO_LOC)


@dataclass(frozen=True)
class IntLit(OclExpr):
    value: int


@dataclass(frozen=True)
class RealLit(OclExpr):
    value: float


@dataclass(frozen=True)
class StrLit(OclExpr):
    value: str


@dataclass(frozen=True)
class BoolLit(OclExpr):
    value: bool


@dataclass(frozen=True)
class NullLit(OclExpr):
    pass


@dataclass(frozen=True)
class VarRef(OclExpr):
    """A simple name. `kind` is filled in by name resolution and is one of
    'param', 'definition', 'session', 'let', 'bound', 'temp'."""

    name: str
    kind: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class SelfRef(OclExpr):
    pass


@dataclass(frozen=True)
class ResultRef(OclExpr):
    pass


@dataclass(frozen=True)
class Nav(OclExpr):
    """Parse-level `expr.Name`; resolution rewrites it to AttrNav or AssocNav."""

    obj: OclExpr
    name: str


@dataclass(frozen=True)
class AttrNav(OclExpr):
    obj: OclExpr
    attr_name: str


@dataclass(frozen=True)
class AssocNav(OclExpr):
    obj: OclExpr
    role_name: str
    multiplicity: Optional[str] = field(default=None, compare=False)  # set by resolution


@dataclass(frozen=True)
class AtPre(OclExpr):
    expr: OclExpr


@dataclass(frozen=True)
class AllInstances(OclExpr):
    class_name: str


@dataclass(frozen=True)
class Any_(OclExpr):
    source: OclExpr
    bound_var: str
    bound_type: Optional[str]
    cond: OclExpr


@dataclass(frozen=True)
class Select(OclExpr):
    source: OclExpr
    bound_var: str
    bound_type: Optional[str]
    cond: OclExpr


@dataclass(frozen=True)
class ForAll(OclExpr):
    source: OclExpr
    bound_var: str
    bound_type: Optional[str]
    body: OclExpr


@dataclass(frozen=True)
class Includes(OclExpr):
    source: OclExpr
    arg: OclExpr


@dataclass(frozen=True)
class Excludes(OclExpr):
    source: OclExpr
    arg: OclExpr


@dataclass(frozen=True)
class Size(OclExpr):
    source: OclExpr


@dataclass(frozen=True)
class IsEmpty(OclExpr):
    source: OclExpr


@dataclass(frozen=True)
class IsUnique(OclExpr):
    class_name: str
    bound_var: str
    attr_name: str


@dataclass(frozen=True)
class OclIsNew(OclExpr):
    expr: OclExpr


@dataclass(frozen=True)
class OclIsUndefined(OclExpr):
    expr: OclExpr


@dataclass(frozen=True)
class OclIsTypeOf(OclExpr):
    expr: OclExpr
    type_name: str


@dataclass(frozen=True)
class LetIn(OclExpr):
    name: str
    class_name: str
    body: OclExpr


@dataclass(frozen=True)
class And(OclExpr):
    left: OclExpr
    right: OclExpr


@dataclass(frozen=True)
class Or(OclExpr):
    left: OclExpr
    right: OclExpr


@dataclass(frozen=True)
class Not(OclExpr):
    expr: OclExpr


COMPARE_OPS = ("=", "<>", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True)
class Compare(OclExpr):
    op: str
    left: OclExpr
    right: OclExpr


@dataclass(frozen=True)
class Arith(OclExpr):
    op: str
    left: OclExpr
    right: OclExpr


@dataclass(frozen=True)
class ExternalCall(OclExpr):
    service_name: str
    op_name: str
    args: tuple[OclExpr, ...]


# ---------------------------------------------------------------------------
# Requirements-model declarations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConceptualClass:
    name: str
    super_class: Optional[str]
    attributes: tuple[tuple[str, str], ...]  # (name, PrimType)
    crud_marked: bool = False
    loc: Loc = field(compare=False, repr=False, default=NO_LOC)


@dataclass(frozen=True)
class AssociationEnd:
    owner: str
    role_name: str
    target: str
    multiplicity: str  # 'one' | 'many'
    loc: Loc = field(compare=False, repr=False, default=NO_LOC)


@dataclass(frozen=True)
class UseCase:
    name: str
    primary_actor: str
    operations: tuple[str, ...]
    loc: Loc = field(compare=False, repr=False, default=NO_LOC)


@dataclass(frozen=True)
class OperationSignature:
    name: str
    params: tuple[tuple[str, str], ...]  # (name, PrimType)
    return_type: Optional[str] = None  # PrimType, class name, or 'Set(Class)'


@dataclass(frozen=True)
class Contract:
    use_case: str
    signature: OperationSignature
    definitions: tuple[tuple[str, str, OclExpr], ...]  # (name, declared type, expr)
    precondition: Optional[OclExpr]
    postcondition: Optional[OclExpr]
    loc: Loc = field(compare=False, repr=False, default=NO_LOC)
    synthesized: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class Invariant:
    name: str
    context_class: Optional[str]
    expr: OclExpr
    loc: Loc = field(compare=False, repr=False, default=NO_LOC)


@dataclass(frozen=True)
class RequirementsModel:
    actors: tuple[str, ...]
    classes: tuple[ConceptualClass, ...]
    associations: tuple[AssociationEnd, ...]
    use_cases: tuple[UseCase, ...]
    contracts: tuple[Contract, ...]
    invariants: tuple[Invariant, ...]

    def class_named(self, name: str) -> Optional[ConceptualClass]:
        for c in self.classes:
            if c.name == name:
                return c
        return None


EMPTY_MODEL = RequirementsModel((), (), (), (), (), ())


# ---------------------------------------------------------------------------
# Runtime values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntV:
    value: int


@dataclass(frozen=True)
class RealV:
    value: float


@dataclass(frozen=True)
class BoolV:
    value: bool


@dataclass(frozen=True)
class StrV:
    value: str


@dataclass(frozen=True)
class RefV:
    object_id: int


class _Undefined:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UndefinedV"


UNDEFINED = _Undefined()


@dataclass(frozen=True)
class RefSetV:
    """Ordered, duplicate-free collection of object ids."""

    ids: tuple[int, ...]

    def __post_init__(self):
        seen = set()
        deduped = []
        for i in self.ids:
            if i not in seen:
                seen.add(i)
                deduped.append(i)
        object.__setattr__(self, "ids", tuple(deduped))


Value = Union[IntV, RealV, BoolV, StrV, RefV, RefSetV, _Undefined]

TRUE = BoolV(True)
FALSE = BoolV(False)


def value_repr(v: Value) -> str:
    """Render a value the way the REPL and diagnostics print it."""
    if v is UNDEFINED:
        return "undefined"
    if isinstance(v, BoolV):
        return "true" if v.value else "false"
    if isinstance(v, IntV):
        return str(v.value)
    if isinstance(v, RealV):
        return repr(v.value)
    if isinstance(v, StrV):
        return '"' + v.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, RefV):
        return f"#{v.object_id}"
    if isinstance(v, RefSetV):
        return "{" + ", ".join(f"#{i}" for i in v.ids) + "}"
    raise TypeError(f"not a value: {v!r}")


# ---------------------------------------------------------------------------
# Pretty-printer
# ---------------------------------------------------------------------------

_PREC_OR = 1
_PREC_AND = 2
_PREC_CMP = 3
_PREC_ADD = 4
_PREC_MUL = 5
_PREC_UNARY = 6
_PREC_POSTFIX = 7


def pp_expr(e: OclExpr) -> str:
    """Canonical text form of an expression; re-parses to an equal AST."""
    return _pp(e, 0)


def _paren(inner: str, prec: int, outer: int) -> str:
    return f"({inner})" if prec < outer else inner


def _pp(e: OclExpr, outer: int) -> str:
    if isinstance(e, IntLit):
        s = str(e.value)
        return f"({s})" if (e.value < 0 and outer > _PREC_ADD) else s
    if isinstance(e, RealLit):
        s = repr(e.value)
        if not ("." in s or "e" in s or "inf" in s or "nan" in s):
            s += ".0"
        neg = s.startswith("-")
        return f"({s})" if (neg and outer > _PREC_ADD) else s
    if isinstance(e, StrLit):
        return '"' + e.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, NullLit):
        return "null"
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, SelfRef):
        return "self"
    if isinstance(e, ResultRef):
        return "result"
    if isinstance(e, Nav):
        return f"{_pp(e.obj, _PREC_POSTFIX)}.{e.name}"
    if isinstance(e, AttrNav):
        return f"{_pp(e.obj, _PREC_POSTFIX)}.{e.attr_name}"
    if isinstance(e, AssocNav):
        return f"{_pp(e.obj, _PREC_POSTFIX)}.{e.role_name}"
    if isinstance(e, AtPre):
        return f"{_pp(e.expr, _PREC_POSTFIX)}@pre"
    if isinstance(e, AllInstances):
        return f"{e.class_name}.allInstances()"
    if isinstance(e, Any_):
        return f"{_pp(e.source, _PREC_POSTFIX)}->any({_binder(e.bound_var, e.bound_type)} | {_pp(e.cond, 0)})"
    if isinstance(e, Select):
        return f"{_pp(e.source, _PREC_POSTFIX)}->select({_binder(e.bound_var, e.bound_type)} | {_pp(e.cond, 0)})"
    if isinstance(e, ForAll):
        return f"{_pp(e.source, _PREC_POSTFIX)}->forAll({_binder(e.bound_var, e.bound_type)} | {_pp(e.body, 0)})"
    if isinstance(e, Includes):
        return f"{_pp(e.source, _PREC_POSTFIX)}->includes({_pp(e.arg, 0)})"
    if isinstance(e, Excludes):
        return f"{_pp(e.source, _PREC_POSTFIX)}->excludes({_pp(e.arg, 0)})"
    if isinstance(e, Size):
        return f"{_pp(e.source, _PREC_POSTFIX)}->size()"
    if isinstance(e, IsEmpty):
        return f"{_pp(e.source, _PREC_POSTFIX)}->isEmpty()"
    if isinstance(e, IsUnique):
        return f"{e.class_name}.allInstances()->isUnique({e.bound_var}:{e.class_name} | {e.bound_var}.{e.attr_name})"
    if isinstance(e, OclIsNew):
        return f"{_pp(e.expr, _PREC_POSTFIX)}.oclIsNew()"
    if isinstance(e, OclIsUndefined):
        return f"{_pp(e.expr, _PREC_POSTFIX)}.oclIsUndefined()"
    if isinstance(e, OclIsTypeOf):
        return f"{_pp(e.expr, _PREC_POSTFIX)}.oclIsTypeOf({e.type_name})"
    if isinstance(e, LetIn):
        return _paren(f"let {e.name}:{e.class_name} in {_pp(e.body, _PREC_AND)}", _PREC_AND, outer)
    if isinstance(e, And):
        return _paren(f"{_pp(e.left, _PREC_AND)} and {_pp(e.right, _PREC_AND + 1)}", _PREC_AND, outer)
    if isinstance(e, Or):
        return _paren(f"{_pp(e.left, _PREC_OR)} or {_pp(e.right, _PREC_OR + 1)}", _PREC_OR, outer)
    if isinstance(e, Not):
        return _paren(f"not {_pp(e.expr, _PREC_UNARY)}", _PREC_UNARY, outer)
    if isinstance(e, Compare):
        return _paren(f"{_pp(e.left, _PREC_ADD)} {e.op} {_pp(e.right, _PREC_ADD)}", _PREC_CMP, outer)
    if isinstance(e, Arith):
        if e.op in ("+", "-"):
            return _paren(f"{_pp(e.left, _PREC_ADD)} {e.op} {_pp(e.right, _PREC_ADD + 1)}", _PREC_ADD, outer)
        return _paren(f"{_pp(e.left, _PREC_MUL)} {e.op} {_pp(e.right, _PREC_MUL + 1)}", _PREC_MUL, outer)
    if isinstance(e, ExternalCall):
        args = ", ".join(_pp(a, 0) for a in e.args)
        return f"{e.service_name}::{e.op_name}({args})"
    raise TypeError(f"cannot print {e!r}")


def _binder(var: str, typ: Optional[str]) -> str:
    return f"{var}:{typ}" if typ else var


def pp_type(t: Optional[str]) -> str:
    return t if t is not None else ""


def pp_model(m: RequirementsModel) -> str:
    """Canonical DSL text for a whole model; parses back structurally equal."""
    out: list[str] = []
    for a in m.actors:
        out.append(f"actor {a}")
    for c in m.classes:
        head = f"class {c.name}"
        if c.super_class:
            head += f" extends {c.super_class}"
        if c.crud_marked:
            head += " [crud]"
        out.append(head + " {")
        for (an, at) in c.attributes:
            out.append(f"  {an}: {at};")
        out.append("}")
    for a in m.associations:
        out.append(f"assoc {a.owner}.{a.role_name} -> {a.target} [{a.multiplicity}]")
    for u in m.use_cases:
        out.append(f"usecase {u.name} actor {u.primary_actor} {{")
        for op in u.operations:
            out.append(f"  {op};")
        out.append("}")
    for inv in m.invariants:
        if inv.context_class:
            out.append(f"inv {inv.name} on {inv.context_class}: {pp_expr(inv.expr)}")
        else:
            out.append(f"inv {inv.name}: {pp_expr(inv.expr)}")
    for ct in m.contracts:
        sig = ct.signature
        params = ", ".join(f"{n}: {t}" for (n, t) in sig.params)
        ret = f" : {sig.return_type}" if sig.return_type else ""
        out.append(f"contract {ct.use_case}::{sig.name}({params}){ret} {{")
        if ct.definitions:
            out.append("  definition:")
            for (dn, dt, de) in ct.definitions:
                out.append(f"    {dn}:{dt} = {pp_expr(de)}")
        if ct.precondition is not None:
            out.append("  precondition:")
            out.append("    " + pp_expr(ct.precondition))
        if ct.postcondition is not None:
            out.append("  postcondition:")
            out.append("    " + pp_expr(ct.postcondition))
        out.append("}")
    return "\n".join(out) + "\n"
