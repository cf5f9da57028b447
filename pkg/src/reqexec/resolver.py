"""Name resolution and type checking.

Resolution rewrites parse-level ASTs: generic `Nav` nodes become `AttrNav` or
`AssocNav` against the owning class, and every `VarRef` is classified as a
parameter, definition binding, let binding, binder variable, or session binding
of the enclosing use case. Undeclared simple names resolve to session bindings;
a session binding takes its type from a `self.name = expr` assignment somewhere
in the use case (operations are processed in system-sequence order).

Resolution is all-or-nothing: any issue raises ModelError carrying every
collected NameIssue/TypeIssue.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .model import (
    AllInstances, And, Any_, Arith, AtPre, AttrNav, AssocNav,
    BoolLit, Compare, ConceptualClass, Contract, ExternalCall, Excludes, ForAll,
    Includes, IntLit, Invariant, IsEmpty, IsUnique, LetIn, Loc, NO_LOC, Nav,
    Not, NullLit, OclExpr, OclIsNew, OclIsTypeOf, OclIsUndefined,
    OperationSignature, Or, RealLit, RequirementsModel, ResultRef, Select,
    SelfRef, Size, StrLit, UseCase, VarRef, PRIM_TYPES,
)


# ---------------------------------------------------------------------------
# Semantic types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimT:
    name: str  # Integer | Real | Boolean | String

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class RefT:
    class_name: str

    def __str__(self) -> str:
        return self.class_name


@dataclass(frozen=True)
class RefSetT:
    class_name: str

    def __str__(self) -> str:
        return f"Set({self.class_name})"


@dataclass(frozen=True)
class NullT:
    def __str__(self) -> str:
        return "Null"


@dataclass(frozen=True)
class AnyT:
    """Result type of an external service call; compatible with anything."""

    def __str__(self) -> str:
        return "Any"


SemanticType = PrimT | RefT | RefSetT | NullT | AnyT

INTEGER = PrimT("Integer")
REAL = PrimT("Real")
BOOLEAN = PrimT("Boolean")
STRING = PrimT("String")

_NUMERIC = (INTEGER, REAL)


@dataclass(frozen=True)
class ModelIssue:
    kind: str  # 'name' | 'type' | 'structure'
    loc: Loc
    name: str
    expected: str
    message: str

    def __str__(self) -> str:
        return f"{self.loc}: {self.message}"


class ModelError(Exception):
    def __init__(self, issues: list[ModelIssue]):
        super().__init__("; ".join(str(i) for i in issues))
        self.issues = issues


# ---------------------------------------------------------------------------
# Resolved artifacts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassInfo:
    name: str
    super_class: Optional[str]
    attrs: tuple[tuple[str, str], ...]      # inherited first, then own
    roles: tuple[tuple[str, str, str], ...]  # (role, target class, multiplicity)
    crud_marked: bool

    def attr_type(self, name: str) -> Optional[str]:
        for (n, t) in self.attrs:
            if n == name:
                return t
        return None

    def role(self, name: str) -> Optional[tuple[str, str]]:
        for (r, tgt, mult) in self.roles:
            if r == name:
                return (tgt, mult)
        return None


@dataclass(frozen=True)
class ResolvedContract:
    use_case: str
    signature: OperationSignature
    definitions: tuple[tuple[str, SemanticType, OclExpr], ...]
    precondition: Optional[OclExpr]
    postcondition: Optional[OclExpr]
    param_types: tuple[tuple[str, SemanticType], ...]
    return_type: Optional[SemanticType]
    synthesized: bool
    loc: Loc = field(compare=False, default=NO_LOC)

    @property
    def name(self) -> str:
        return self.signature.name


@dataclass(frozen=True)
class ResolvedInvariant:
    name: str
    context_class: Optional[str]
    expr: OclExpr


@dataclass(frozen=True)
class ResolvedModel:
    model: RequirementsModel
    classes: dict[str, ClassInfo]
    class_order: tuple[str, ...]
    use_cases: tuple[UseCase, ...]
    contracts: dict[tuple[str, str], ResolvedContract]
    invariants: tuple[ResolvedInvariant, ...]
    session_types: dict[str, dict[str, SemanticType]]

    def subclasses_of(self, class_name: str) -> tuple[str, ...]:
        out = []
        for c in self.class_order:
            if c == class_name:
                continue
            cur = self.classes[c].super_class
            while cur is not None:
                if cur == class_name:
                    out.append(c)
                    break
                cur = self.classes[cur].super_class
        return tuple(out)

    def conforms(self, sub: str, sup: str) -> bool:
        cur: Optional[str] = sub
        while cur is not None:
            if cur == sup:
                return True
            cur = self.classes[cur].super_class
        return False

    def contracts_of(self, use_case: str) -> list[ResolvedContract]:
        uc = next(u for u in self.use_cases if u.name == use_case)
        return [self.contracts[(use_case, op)] for op in uc.operations]


def parse_type_name(name: str, classes: dict[str, ClassInfo]) -> Optional[SemanticType]:
    if name in PRIM_TYPES:
        return PrimT(name)
    if name.startswith("Set(") and name.endswith(")"):
        inner = name[4:-1]
        return RefSetT(inner) if inner in classes else None
    if name in classes:
        return RefT(name)
    return None


# ---------------------------------------------------------------------------
# Resolution pass
# ---------------------------------------------------------------------------

class _Resolver:
    def __init__(self, model: RequirementsModel):
        self.model = model
        self.issues: list[ModelIssue] = []
        self.classes: dict[str, ClassInfo] = {}
        self.class_order: tuple[str, ...] = ()
        self.session_types: dict[str, dict[str, SemanticType]] = {}

    def issue(self, kind: str, loc: Loc, name: str, expected: str, message: str) -> None:
        self.issues.append(ModelIssue(kind, loc, name, expected, message))

    # -- declaration tables --------------------------------------------------
    def build_class_table(self) -> None:
        seen: dict[str, ConceptualClass] = {}
        for c in self.model.classes:
            if c.name in seen:
                self.issue("name", c.loc, c.name, "unique class name",
                           f"duplicate class {c.name!r}")
                continue
            if c.name in PRIM_TYPES:
                self.issue("name", c.loc, c.name, "class name",
                           f"class name {c.name!r} collides with a primitive type")
                continue
            seen[c.name] = c
        for c in seen.values():
            if c.super_class is not None and c.super_class not in seen:
                self.issue("name", c.loc, c.super_class, "declared class",
                           f"unknown superclass {c.super_class!r} of {c.name!r}")
        # cycle check
        for c in seen.values():
            trail = set()
            cur: Optional[str] = c.name
            while cur is not None and cur in seen:
                if cur in trail:
                    self.issue("structure", c.loc, c.name, "acyclic inheritance",
                               f"inheritance cycle through {c.name!r}")
                    break
                trail.add(cur)
                cur = seen[cur].super_class

        if self.issues:
            return

        role_table: dict[str, list[tuple[str, str, str]]] = {n: [] for n in seen}
        end_keys = set()
        for a in self.model.associations:
            if a.owner not in seen:
                self.issue("name", a.loc, a.owner, "declared class",
                           f"association owner {a.owner!r} is not a declared class")
                continue
            if a.target not in seen:
                self.issue("name", a.loc, a.target, "declared class",
                           f"association target {a.target!r} is not a declared class")
                continue
            if (a.owner, a.role_name) in end_keys:
                self.issue("name", a.loc, a.role_name, "unique role per class",
                           f"duplicate role {a.owner}.{a.role_name}")
                continue
            end_keys.add((a.owner, a.role_name))
            role_table[a.owner].append((a.role_name, a.target, a.multiplicity))

        def chain(name: str) -> list[ConceptualClass]:
            out: list[ConceptualClass] = []
            cur: Optional[str] = name
            guard = 0
            while cur is not None and cur in seen and guard < len(seen) + 1:
                out.append(seen[cur])
                cur = seen[cur].super_class
                guard += 1
            return list(reversed(out))

        for c in seen.values():
            attrs: list[tuple[str, str]] = []
            attr_names: set[str] = set()
            roles: list[tuple[str, str, str]] = []
            role_names: set[str] = set()
            for anc in chain(c.name):
                for (an, at) in anc.attributes:
                    if an in attr_names:
                        self.issue("name", c.loc, an, "unique attribute",
                                   f"attribute {an!r} declared more than once in {c.name!r} hierarchy")
                        continue
                    attr_names.add(an)
                    attrs.append((an, at))
                for (rn, tgt, mult) in role_table.get(anc.name, ()):
                    if rn in role_names or rn in attr_names:
                        self.issue("name", c.loc, rn, "unique member name",
                                   f"role {rn!r} clashes with another member of {c.name!r}")
                        continue
                    role_names.add(rn)
                    roles.append((rn, tgt, mult))
            self.classes[c.name] = ClassInfo(c.name, c.super_class, tuple(attrs),
                                             tuple(roles), c.crud_marked)
        self.class_order = tuple(c.name for c in self.model.classes if c.name in self.classes)

    # -- expression resolution ------------------------------------------------
    def resolve(self) -> ResolvedModel:
        self.build_class_table()
        if self.issues:
            raise ModelError(self.issues)

        actor_names = set(self.model.actors)
        for a in self.model.actors:
            if self.model.actors.count(a) > 1:
                self.issue("name", NO_LOC, a, "unique actor", f"duplicate actor {a!r}")

        contracts_by_key: dict[tuple[str, str], Contract] = {}
        for ct in self.model.contracts:
            key = (ct.use_case, ct.signature.name)
            if key in contracts_by_key:
                self.issue("name", ct.loc, ct.signature.name, "unique contract",
                           f"duplicate contract {ct.use_case}::{ct.signature.name}")
                continue
            contracts_by_key[key] = ct

        uc_names = set()
        for uc in self.model.use_cases:
            if uc.name in uc_names:
                self.issue("name", uc.loc, uc.name, "unique use case",
                           f"duplicate use case {uc.name!r}")
                continue
            uc_names.add(uc.name)
            if uc.primary_actor not in actor_names and not _is_synthesized_uc(uc, self.model):
                self.issue("name", uc.loc, uc.primary_actor, "declared actor",
                           f"use case {uc.name!r} names unknown actor {uc.primary_actor!r}")
            for op in uc.operations:
                if (uc.name, op) not in contracts_by_key:
                    self.issue("name", uc.loc, op, "contract",
                               f"operation {op!r} of use case {uc.name!r} has no contract")
        for (ucn, opn), ct in contracts_by_key.items():
            uc = next((u for u in self.model.use_cases if u.name == ucn), None)
            if uc is None:
                self.issue("name", ct.loc, ucn, "declared use case",
                           f"contract {ucn}::{opn} names unknown use case {ucn!r}")
            elif opn not in uc.operations:
                self.issue("name", ct.loc, opn, "listed operation",
                           f"contract {ucn}::{opn} is not listed in use case {ucn!r}")

        if self.issues:
            raise ModelError(self.issues)

        resolved_contracts: dict[tuple[str, str], ResolvedContract] = {}
        for uc in self.model.use_cases:
            self.session_types[uc.name] = {}
            for op in uc.operations:
                ct = contracts_by_key[(uc.name, op)]
                rc = self.resolve_contract(ct, uc)
                if rc is not None:
                    resolved_contracts[(uc.name, op)] = rc

        inv_names = set()
        resolved_invs: list[ResolvedInvariant] = []
        for inv in self.model.invariants:
            if inv.name in inv_names:
                self.issue("name", inv.loc, inv.name, "unique invariant",
                           f"duplicate invariant {inv.name!r}")
                continue
            inv_names.add(inv.name)
            ri = self.resolve_invariant(inv)
            if ri is not None:
                resolved_invs.append(ri)

        if self.issues:
            raise ModelError(self.issues)

        return ResolvedModel(
            model=self.model,
            classes=self.classes,
            class_order=self.class_order,
            use_cases=self.model.use_cases,
            contracts=resolved_contracts,
            invariants=tuple(resolved_invs),
            session_types=self.session_types,
        )

    def resolve_contract(self, ct: Contract, uc: UseCase) -> Optional[ResolvedContract]:
        before = len(self.issues)
        env: dict[str, tuple[str, SemanticType]] = {}
        param_types: list[tuple[str, SemanticType]] = []
        pseen = set()
        for (pn, pt) in ct.signature.params:
            if pn in pseen:
                self.issue("name", ct.loc, pn, "unique parameter",
                           f"duplicate parameter {pn!r} in {ct.use_case}::{ct.signature.name}")
                continue
            pseen.add(pn)
            env[pn] = ("param", PrimT(pt))
            param_types.append((pn, PrimT(pt)))

        ret_type: Optional[SemanticType] = None
        if ct.signature.return_type is not None:
            ret_type = parse_type_name(ct.signature.return_type, self.classes)
            if ret_type is None:
                self.issue("name", ct.loc, ct.signature.return_type, "type",
                           f"unknown return type {ct.signature.return_type!r}")

        session = self.session_types[uc.name]
        ctx = _Ctx(self, ct, env, session, ret_type)

        rdefs: list[tuple[str, SemanticType, OclExpr]] = []
        for (dn, dt_str, de) in ct.definitions:
            dt = parse_type_name(dt_str, self.classes)
            if dt is None:
                self.issue("name", de.loc, dt_str, "type",
                           f"unknown type {dt_str!r} in definition of {dn!r}")
                continue
            if dn in env:
                self.issue("name", de.loc, dn, "unique definition",
                           f"definition {dn!r} shadows another name")
                continue
            re_, rt = ctx.rw(de, "definition")
            if rt is not None and not self.assignable(rt, dt):
                self.issue("type", de.loc, dn, str(dt),
                           f"definition {dn!r} declared {dt} but expression has type {rt}")
            env[dn] = ("definition", dt)
            rdefs.append((dn, dt, re_))

        # Session assignments in the postcondition feed the use-case binding
        # table before the full postcondition is typed.
        if ct.postcondition is not None:
            self.infer_session_assignments(ct, ctx)

        rpre = None
        if ct.precondition is not None:
            rpre, tpre = ctx.rw(ct.precondition, "pre")
            if tpre is not None and tpre != BOOLEAN:
                self.issue("type", ct.precondition.loc, "precondition", "Boolean",
                           f"precondition of {ct.use_case}::{ct.signature.name} is {tpre}, not Boolean")
        rpost = None
        if ct.postcondition is not None:
            rpost, tpost = ctx.rw(ct.postcondition, "post")
            if tpost is not None and not (isinstance(tpost, PrimT) and tpost.name == "Boolean"):
                self.issue("type", ct.postcondition.loc, "postcondition", "Boolean",
                           f"postcondition of {ct.use_case}::{ct.signature.name} is {tpost}, not Boolean")

        if len(self.issues) > before:
            return None
        return ResolvedContract(
            use_case=ct.use_case,
            signature=ct.signature,
            definitions=tuple(rdefs),
            precondition=rpre,
            postcondition=rpost,
            param_types=tuple(param_types),
            return_type=ret_type,
            synthesized=ct.synthesized,
            loc=ct.loc,
        )

    def infer_session_assignments(self, ct: Contract, ctx: "_Ctx") -> None:
        """Record `self.x = e` (and bare `x = e` for undeclared x) binding types."""
        assignments: list[tuple[str, OclExpr, Loc]] = []
        lets: dict[str, SemanticType] = {}

        def scan(e: OclExpr) -> None:
            if isinstance(e, And):
                scan(e.left)
                scan(e.right)
            elif isinstance(e, LetIn):
                if e.class_name in self.classes:
                    lets[e.name] = RefT(e.class_name)
                scan(e.body)
            elif isinstance(e, Compare) and e.op == "=":
                lhs = e.left
                if isinstance(lhs, Nav) and isinstance(lhs.obj, SelfRef):
                    assignments.append((lhs.name, e.right, e.loc))
                elif isinstance(lhs, VarRef) and lhs.name not in ctx.env \
                        and lhs.name not in lets and lhs.name not in self.classes:
                    assignments.append((lhs.name, e.right, e.loc))

        scan(ct.postcondition)
        if not assignments:
            return
        probe = _Ctx(self, ct, dict(ctx.env), ctx.session, ctx.ret_type, quiet=True)
        for (ln, lt) in lets.items():
            probe.env[ln] = ("let", lt)
        for _round in range(len(assignments) + 1):
            changed = False
            for (name, rhs, loc) in assignments:
                _, rt = probe.rw(rhs, "post")
                if rt is None or isinstance(rt, NullT):
                    continue
                prev = ctx.session.get(name)
                if prev is None:
                    ctx.session[name] = rt
                    changed = True
                elif prev != rt and not isinstance(rt, AnyT) and not isinstance(prev, AnyT):
                    if not (self._both_refs_related(prev, rt)):
                        self.issue("type", loc, name, str(prev),
                                   f"session binding {name!r} assigned conflicting types {prev} and {rt}")
            if not changed:
                break

    def _both_refs_related(self, a: SemanticType, b: SemanticType) -> bool:
        if isinstance(a, RefT) and isinstance(b, RefT):
            return self_conforms(self, a.class_name, b.class_name) or \
                self_conforms(self, b.class_name, a.class_name)
        return False

    def resolve_invariant(self, inv: Invariant) -> Optional[ResolvedInvariant]:
        before = len(self.issues)
        if inv.context_class is not None and inv.context_class not in self.classes:
            self.issue("name", inv.loc, inv.context_class, "declared class",
                       f"invariant {inv.name!r} names unknown class {inv.context_class!r}")
            return None
        ctx = _Ctx(self, None, {}, {}, None, inv_context=inv.context_class)
        re_, rt = ctx.rw(inv.expr, "inv")
        if rt is not None and not (isinstance(rt, PrimT) and rt.name == "Boolean"):
            self.issue("type", inv.expr.loc, inv.name, "Boolean",
                       f"invariant {inv.name!r} is {rt}, not Boolean")
        if len(self.issues) > before:
            return None
        return ResolvedInvariant(inv.name, inv.context_class, re_)

    def assignable(self, src: SemanticType, dst: SemanticType) -> bool:
        if isinstance(src, AnyT) or isinstance(dst, AnyT):
            return True
        if isinstance(src, NullT):
            return isinstance(dst, (RefT, RefSetT))
        if src == dst:
            return True
        if src == INTEGER and dst == REAL:
            return True
        if isinstance(src, RefT) and isinstance(dst, RefT):
            return self_conforms(self, src.class_name, dst.class_name)
        if isinstance(src, RefSetT) and isinstance(dst, RefSetT):
            return self_conforms(self, src.class_name, dst.class_name)
        return False


def self_conforms(r: _Resolver, sub: str, sup: str) -> bool:
    cur: Optional[str] = sub
    while cur is not None:
        if cur == sup:
            return True
        cur = r.classes[cur].super_class if cur in r.classes else None
    return False


def _is_synthesized_uc(uc: UseCase, model: RequirementsModel) -> bool:
    return any(c.synthesized for c in model.contracts if c.use_case == uc.name)


class _Ctx:
    """Per-expression rewriting context: environment plus section rules."""

    def __init__(self, r: _Resolver, ct: Optional[Contract],
                 env: dict[str, tuple[str, SemanticType]],
                 session: dict[str, SemanticType],
                 ret_type: Optional[SemanticType],
                 inv_context: Optional[str] = None,
                 quiet: bool = False):
        self.r = r
        self.ct = ct
        self.env = env
        self.session = session
        self.ret_type = ret_type
        self.inv_context = inv_context
        self.quiet = quiet

    def issue(self, kind: str, loc: Loc, name: str, expected: str, message: str) -> None:
        if not self.quiet:
            self.r.issue(kind, loc, name, expected, message)

    # Returns (rewritten expr, type). Type None means an issue was recorded
    # (or suppressed in quiet mode) and the result must not be trusted.
    def rw(self, e: OclExpr, section: str,
           binders: Optional[dict[str, SemanticType]] = None) -> tuple[OclExpr, Optional[SemanticType]]:
        binders = binders or {}

        if isinstance(e, IntLit):
            return e, INTEGER
        if isinstance(e, RealLit):
            return e, REAL
        if isinstance(e, StrLit):
            return e, STRING
        if isinstance(e, BoolLit):
            return e, BOOLEAN
        if isinstance(e, NullLit):
            return e, NullT()

        if isinstance(e, VarRef):
            if e.name in binders:
                return VarRef(e.name, "bound", loc=e.loc), binders[e.name]
            if e.name in self.env:
                kind, t = self.env[e.name]
                return VarRef(e.name, kind, loc=e.loc), t
            if e.name in self.r.classes:
                self.issue("name", e.loc, e.name, "value",
                           f"class name {e.name!r} used as a value")
                return e, None
            if self.ct is None:
                self.issue("name", e.loc, e.name, "declared name",
                           f"unknown name {e.name!r} in invariant")
                return e, None
            if e.name in self.session:
                return VarRef(e.name, "session", loc=e.loc), self.session[e.name]
            self.issue("name", e.loc, e.name, "resolvable name",
                       f"name {e.name!r} does not resolve: not a parameter, definition, "
                       f"or session binding assigned in use case {self.ct.use_case!r}")
            return e, None

        if isinstance(e, SelfRef):
            if self.inv_context is not None:
                return e, RefT(self.inv_context)
            self.issue("structure", e.loc, "self", "navigation",
                       "bare `self` is only valid in an invariant with a context class; "
                       "in contracts use `self.<binding>`")
            return e, None

        if isinstance(e, ResultRef):
            if section != "post":
                self.issue("structure", e.loc, "result", "postcondition",
                           "`result` may only appear in a postcondition")
                return e, None
            if self.ret_type is None:
                self.issue("type", e.loc, "result", "declared return type",
                           "`result` used but the operation declares no return type")
                return e, None
            return e, self.ret_type

        if isinstance(e, Nav):
            if isinstance(e.obj, SelfRef) and self.inv_context is None:
                if self.ct is None:
                    self.issue("name", e.loc, e.name, "context", "self outside a contract")
                    return e, None
                if e.name in self.session:
                    return VarRef(e.name, "session", loc=e.loc), self.session[e.name]
                self.issue("name", e.loc, e.name, "session binding",
                           f"session binding {e.name!r} is never assigned in use case "
                           f"{self.ct.use_case!r}")
                return e, None
            robj, t = self.rw(e.obj, section, binders)
            if t is None:
                return e, None
            if isinstance(t, RefT):
                info = self.r.classes[t.class_name]
                at = info.attr_type(e.name)
                if at is not None:
                    return AttrNav(robj, e.name, loc=e.loc), PrimT(at)
                role = info.role(e.name)
                if role is not None:
                    tgt, mult = role
                    rt: SemanticType = RefT(tgt) if mult == "one" else RefSetT(tgt)
                    return AssocNav(robj, e.name, mult, loc=e.loc), rt
                self.issue("name", e.loc, e.name, f"attribute or role of {t.class_name}",
                           f"{t.class_name!r} has no attribute or role {e.name!r}")
                return e, None
            self.issue("type", e.loc, e.name, "object",
                       f"cannot navigate {e.name!r} over a value of type {t}")
            return e, None

        if isinstance(e, AtPre):
            if section != "post":
                self.issue("structure", e.loc, "@pre", "postcondition",
                           "@pre may only appear in a postcondition")
                return e, None
            re_, t = self.rw(e.expr, section, binders)
            return AtPre(re_, loc=e.loc), t

        if isinstance(e, AllInstances):
            if e.class_name not in self.r.classes:
                self.issue("name", e.loc, e.class_name, "declared class",
                           f"allInstances over unknown class {e.class_name!r}")
                return e, None
            return e, RefSetT(e.class_name)

        if isinstance(e, (Any_, Select, ForAll)):
            rsrc, st = self.rw(e.source, section, binders)
            if st is None:
                return e, None
            if not isinstance(st, RefSetT):
                self.issue("type", e.loc, "->", "collection",
                           f"collection operation over non-collection type {st}")
                return e, None
            if e.bound_type is not None and e.bound_type != st.class_name:
                if not (e.bound_type in self.r.classes
                        and self_conforms(self.r, st.class_name, e.bound_type)):
                    self.issue("type", e.loc, e.bound_var, st.class_name,
                               f"binder {e.bound_var}:{e.bound_type} does not match element type "
                               f"{st.class_name}")
                    return e, None
            inner = dict(binders)
            inner[e.bound_var] = RefT(st.class_name)
            body_name = "cond" if not isinstance(e, ForAll) else "body"
            rbody, bt = self.rw(e.cond if not isinstance(e, ForAll) else e.body, section, inner)
            if bt is not None and bt != BOOLEAN:
                self.issue("type", e.loc, body_name, "Boolean",
                           f"{type(e).__name__.lower().rstrip('_')} body is {bt}, not Boolean")
            cls = type(e)
            if isinstance(e, ForAll):
                return ForAll(rsrc, e.bound_var, e.bound_type, rbody, loc=e.loc), BOOLEAN
            out = cls(rsrc, e.bound_var, e.bound_type, rbody, loc=e.loc)
            return out, (RefT(st.class_name) if isinstance(e, Any_) else RefSetT(st.class_name))

        if isinstance(e, (Includes, Excludes)):
            rsrc, st = self.rw(e.source, section, binders)
            rarg, at = self.rw(e.arg, section, binders)
            if st is None or at is None:
                return e, None
            if not isinstance(st, RefSetT):
                self.issue("type", e.loc, "includes", "collection",
                           f"includes/excludes over non-collection type {st}")
                return e, None
            if not (isinstance(at, (RefT, NullT, AnyT))):
                self.issue("type", e.loc, "includes", "object argument",
                           f"includes/excludes argument has type {at}")
                return e, None
            if isinstance(at, RefT) and not (
                    self_conforms(self.r, at.class_name, st.class_name)
                    or self_conforms(self.r, st.class_name, at.class_name)):
                self.issue("type", e.loc, "includes", st.class_name,
                           f"includes/excludes argument {at} unrelated to element type {st.class_name}")
            return type(e)(rsrc, rarg, loc=e.loc), BOOLEAN

        if isinstance(e, Size):
            rsrc, st = self.rw(e.source, section, binders)
            if st is not None and not isinstance(st, RefSetT):
                self.issue("type", e.loc, "size", "collection", f"size() over type {st}")
                return e, None
            return Size(rsrc, loc=e.loc), INTEGER

        if isinstance(e, IsEmpty):
            rsrc, st = self.rw(e.source, section, binders)
            if st is not None and not isinstance(st, RefSetT):
                self.issue("type", e.loc, "isEmpty", "collection", f"isEmpty() over type {st}")
                return e, None
            return IsEmpty(rsrc, loc=e.loc), BOOLEAN

        if isinstance(e, IsUnique):
            if e.class_name not in self.r.classes:
                self.issue("name", e.loc, e.class_name, "declared class",
                           f"isUnique over unknown class {e.class_name!r}")
                return e, None
            if self.r.classes[e.class_name].attr_type(e.attr_name) is None:
                self.issue("name", e.loc, e.attr_name, f"attribute of {e.class_name}",
                           f"{e.class_name!r} has no attribute {e.attr_name!r}")
                return e, None
            return e, BOOLEAN

        if isinstance(e, OclIsNew):
            if section != "post":
                self.issue("structure", e.loc, "oclIsNew", "postcondition",
                           "oclIsNew() may only appear in a postcondition")
                return e, None
            re_, t = self.rw(e.expr, section, binders)
            if t is not None and not isinstance(t, RefT):
                self.issue("type", e.loc, "oclIsNew", "object", f"oclIsNew() over type {t}")
            return OclIsNew(re_, loc=e.loc), BOOLEAN

        if isinstance(e, OclIsUndefined):
            re_, _t = self.rw(e.expr, section, binders)
            return OclIsUndefined(re_, loc=e.loc), BOOLEAN

        if isinstance(e, OclIsTypeOf):
            re_, _t = self.rw(e.expr, section, binders)
            if e.type_name not in self.r.classes and e.type_name not in PRIM_TYPES:
                self.issue("name", e.loc, e.type_name, "type",
                           f"oclIsTypeOf names unknown type {e.type_name!r}")
                return e, None
            return OclIsTypeOf(re_, e.type_name, loc=e.loc), BOOLEAN

        if isinstance(e, LetIn):
            if section != "post":
                self.issue("structure", e.loc, "let", "postcondition",
                           "let..in may only appear in a postcondition")
                return e, None
            if e.class_name not in self.r.classes:
                self.issue("name", e.loc, e.class_name, "declared class",
                           f"let binds unknown class {e.class_name!r}")
                return e, None
            if e.name in self.env or e.name in binders:
                self.issue("name", e.loc, e.name, "fresh name",
                           f"let binding {e.name!r} shadows another name")
            saved = self.env.get(e.name)
            self.env[e.name] = ("let", RefT(e.class_name))
            rbody, bt = self.rw(e.body, section, binders)
            if saved is None:
                del self.env[e.name]
            else:
                self.env[e.name] = saved
            return LetIn(e.name, e.class_name, rbody, loc=e.loc), bt

        if isinstance(e, (And, Or)):
            rl, tl = self.rw(e.left, section, binders)
            rr, tr = self.rw(e.right, section, binders)
            for (t, side) in ((tl, e.left), (tr, e.right)):
                if t is not None and t != BOOLEAN and not isinstance(t, AnyT):
                    self.issue("type", side.loc, "and/or", "Boolean",
                               f"logical operand has type {t}")
            return type(e)(rl, rr, loc=e.loc), BOOLEAN

        if isinstance(e, Not):
            re_, t = self.rw(e.expr, section, binders)
            if t is not None and t != BOOLEAN and not isinstance(t, AnyT):
                self.issue("type", e.loc, "not", "Boolean", f"negation of type {t}")
            return Not(re_, loc=e.loc), BOOLEAN

        if isinstance(e, Compare):
            rl, tl = self.rw(e.left, section, binders)
            rr, tr = self.rw(e.right, section, binders)
            if tl is None or tr is None:
                return Compare(e.op, rl, rr, loc=e.loc), None
            if e.op in ("<", "<=", ">", ">="):
                if tl not in _NUMERIC or tr not in _NUMERIC:
                    if not (isinstance(tl, AnyT) or isinstance(tr, AnyT)):
                        self.issue("type", e.loc, e.op, "numeric operands",
                                   f"ordering comparison over {tl} and {tr}")
                        return e, None
            else:
                if not self.comparable(tl, tr):
                    self.issue("type", e.loc, e.op, "compatible operands",
                               f"cannot compare {tl} with {tr}")
                    return e, None
            return Compare(e.op, rl, rr, loc=e.loc), BOOLEAN

        if isinstance(e, Arith):
            rl, tl = self.rw(e.left, section, binders)
            rr, tr = self.rw(e.right, section, binders)
            if tl is None or tr is None:
                return Arith(e.op, rl, rr, loc=e.loc), None
            ok_l = tl in _NUMERIC or isinstance(tl, AnyT)
            ok_r = tr in _NUMERIC or isinstance(tr, AnyT)
            if not (ok_l and ok_r):
                self.issue("type", e.loc, e.op, "numeric operands",
                           f"arithmetic over {tl} and {tr}")
                return e, None
            if e.op == "/":
                return Arith(e.op, rl, rr, loc=e.loc), REAL
            t = INTEGER if (tl == INTEGER and tr == INTEGER) else REAL
            return Arith(e.op, rl, rr, loc=e.loc), t

        if isinstance(e, ExternalCall):
            rargs = []
            for a in e.args:
                ra, _t = self.rw(a, section, binders)
                rargs.append(ra)
            return ExternalCall(e.service_name, e.op_name, tuple(rargs), loc=e.loc), AnyT()

        raise TypeError(f"unhandled expression node {e!r}")

    def comparable(self, a: SemanticType, b: SemanticType) -> bool:
        if isinstance(a, AnyT) or isinstance(b, AnyT):
            return True
        if isinstance(a, NullT) or isinstance(b, NullT):
            return True
        if a in _NUMERIC and b in _NUMERIC:
            return True
        if a == b:
            return True
        if isinstance(a, RefT) and isinstance(b, RefT):
            return self_conforms(self.r, a.class_name, b.class_name) or \
                self_conforms(self.r, b.class_name, a.class_name)
        if isinstance(a, RefSetT) and isinstance(b, RefSetT):
            return True
        return False


def resolve_model(model: RequirementsModel) -> ResolvedModel:
    """Resolve and type-check a parsed model; raises ModelError on any issue."""
    return _Resolver(model).resolve()


def type_of(expr: OclExpr, resolved: ResolvedModel,
            contract: Optional[ResolvedContract] = None) -> SemanticType:
    """Type of a standalone expression in a resolved model's scope.

    Convenience used by tests and tooling; contract-scoped names are available
    when `contract` is given.
    """
    r = _Resolver(resolved.model)
    r.classes = resolved.classes
    r.class_order = resolved.class_order
    env: dict[str, tuple[str, SemanticType]] = {}
    session: dict[str, SemanticType] = {}
    ret = None
    section = "post"
    if contract is not None:
        for (pn, pt) in contract.param_types:
            env[pn] = ("param", pt)
        for (dn, dt, _de) in contract.definitions:
            env[dn] = ("definition", dt)
        session = dict(resolved.session_types.get(contract.use_case, {}))
        ret = contract.return_type
    ctx = _Ctx(r, contract and _contract_stub(contract), env, session, ret)
    _re, t = ctx.rw(expr, section)
    if r.issues or t is None:
        raise ModelError(r.issues or [ModelIssue("type", expr.loc, "", "", "untypable expression")])
    return t


def _contract_stub(rc: ResolvedContract) -> Contract:
    return Contract(rc.use_case, rc.signature, (), None, None)
