"""Synthesis of create/read/update/delete contracts for crud-marked classes.

Each marked class gets a `Manage<Class>` use case with four operations keyed
on the class's first declared attribute. The synthesized contracts are plain
AST and flow through resolution and compilation like hand-written ones.
"""

from __future__ import annotations

from typing import Optional

from .model import (
    AllInstances, And, Any_, BoolLit, Compare, ConceptualClass, Contract,
    Excludes, Includes, LetIn, Nav, OclExpr, OclIsNew, OclIsUndefined,
    OperationSignature, RequirementsModel, ResultRef, UseCase, VarRef,
)

CRUD_ACTOR = "Administrator"


def _all_attributes(cls: ConceptualClass, model: RequirementsModel) -> list[tuple[str, str]]:
    chain: list[ConceptualClass] = []
    seen: set[str] = set()
    cur: Optional[ConceptualClass] = cls
    while cur is not None and cur.name not in seen:
        seen.add(cur.name)
        chain.append(cur)
        cur = model.class_named(cur.super_class) if cur.super_class else None
    attrs: list[tuple[str, str]] = []
    for c in reversed(chain):
        attrs.extend(c.attributes)
    return attrs


def _conj(parts: list[OclExpr]) -> OclExpr:
    expr = parts[0]
    for p in parts[1:]:
        expr = And(expr, p)
    return expr


def synthesize_crud(model: RequirementsModel) -> RequirementsModel:
    """Return the model extended with Manage<Class> use cases and contracts."""
    new_ucs: list[UseCase] = []
    new_contracts: list[Contract] = []
    for cls in model.classes:
        if not cls.crud_marked:
            continue
        attrs = _all_attributes(cls, model)
        if not attrs:
            continue
        c = cls.name
        uc = f"Manage{c}"
        key_name, key_type = attrs[0]
        ops = [f"create{c}", f"read{c}", f"update{c}", f"delete{c}"]
        new_ucs.append(UseCase(uc, CRUD_ACTOR, tuple(ops)))

        obj = VarRef("o")
        found = VarRef("found")

        create_post = [OclIsNew(obj)]
        create_post += [Compare("=", Nav(obj, an), VarRef(an)) for (an, _t) in attrs]
        create_post += [Includes(AllInstances(c), obj), Compare("=", ResultRef(), BoolLit(True))]
        new_contracts.append(Contract(
            uc, OperationSignature(f"create{c}", tuple(attrs), "Boolean"),
            definitions=(),
            precondition=None,
            postcondition=LetIn("o", c, _conj(create_post)),
            synthesized=True,
        ))

        finder = Any_(AllInstances(c), "x", c, Compare("=", Nav(VarRef("x"), key_name), VarRef(key_name)))
        new_contracts.append(Contract(
            uc, OperationSignature(f"read{c}", ((key_name, key_type),), c),
            definitions=(("found", c, finder),),
            precondition=None,
            postcondition=Compare("=", ResultRef(), found),
            synthesized=True,
        ))

        exists = Compare("=", OclIsUndefined(found), BoolLit(False))
        update_post = [Compare("=", Nav(found, an), VarRef(an)) for (an, _t) in attrs[1:]]
        update_post.append(Compare("=", ResultRef(), BoolLit(True)))
        new_contracts.append(Contract(
            uc, OperationSignature(f"update{c}", tuple(attrs), "Boolean"),
            definitions=(("found", c, finder),),
            precondition=exists,
            postcondition=_conj(update_post),
            synthesized=True,
        ))

        new_contracts.append(Contract(
            uc, OperationSignature(f"delete{c}", ((key_name, key_type),), "Boolean"),
            definitions=(("found", c, finder),),
            precondition=exists,
            postcondition=_conj([Excludes(AllInstances(c), found),
                                 Compare("=", ResultRef(), BoolLit(True))]),
            synthesized=True,
        ))
    if not new_ucs:
        return model
    return RequirementsModel(
        model.actors, model.classes, model.associations,
        model.use_cases + tuple(new_ucs),
        model.contracts + tuple(new_contracts),
        model.invariants,
    )
