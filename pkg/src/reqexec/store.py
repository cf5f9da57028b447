"""The live object graph: per-class instance lists, attributes, and links.

Exactly the primitive operations of the engine's rule vocabulary live here:
find/create/add/release for objects, get/set for attributes, find/add/remove
for one- and many-links. Query iteration order is object-id order, which is
creation order; `find_object` therefore resolves ties deterministically to the
earliest-created match.

A store is owned by a single executor at a time; operations are not locked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .model import BoolV, RefSetV, RefV, UNDEFINED, Value, IntV, RealV, StrV
from .resolver import ClassInfo, ResolvedModel


class StoreError(Exception):
    pass


class UnknownClass(StoreError):
    pass


class UnknownAttribute(StoreError):
    pass


class UnknownRole(StoreError):
    pass


class DanglingRef(StoreError):
    pass


class MultiplicityMismatch(StoreError):
    pass


class StoreTypeMismatch(StoreError):
    pass


Predicate = Callable[[RefV], bool]


@dataclass
class ObjectRecord:
    object_id: int
    class_name: str
    attributes: dict[str, Value]
    links: dict[str, Optional[int] | list[int]]

    def copy(self) -> "ObjectRecord":
        links: dict[str, Optional[int] | list[int]] = {}
        for k, v in self.links.items():
            links[k] = list(v) if isinstance(v, list) else v
        return ObjectRecord(self.object_id, self.class_name, dict(self.attributes), links)


class ObjectStore:
    def __init__(self, schema: dict[str, ClassInfo], class_order: tuple[str, ...],
                 tolerance: float = 1e-9):
        self.schema = schema
        self.class_order = class_order
        self.tolerance = tolerance
        self.records: dict[int, ObjectRecord] = {}
        self.instances_by_class: dict[str, list[int]] = {c: [] for c in class_order}
        self.next_id = 1
        self._subclasses: dict[str, tuple[str, ...]] = {}
        for c in class_order:
            subs = []
            for other in class_order:
                if other == c:
                    continue
                cur = schema[other].super_class
                while cur is not None:
                    if cur == c:
                        subs.append(other)
                        break
                    cur = schema[cur].super_class
            self._subclasses[c] = tuple(subs)

    @classmethod
    def for_model(cls, resolved: ResolvedModel, tolerance: float = 1e-9) -> "ObjectStore":
        return cls(resolved.classes, resolved.class_order, tolerance)

    # -- helpers -------------------------------------------------------------
    def _require_class(self, class_name: str) -> ClassInfo:
        info = self.schema.get(class_name)
        if info is None:
            raise UnknownClass(f"unknown class {class_name!r}")
        return info

    def _live(self, ref: RefV) -> ObjectRecord:
        rec = self.records.get(ref.object_id)
        if rec is None:
            raise DanglingRef(f"object #{ref.object_id} does not exist")
        return rec

    def _conforms(self, sub: str, sup: str) -> bool:
        cur: Optional[str] = sub
        while cur is not None:
            if cur == sup:
                return True
            cur = self.schema[cur].super_class
        return False

    def live_instance_ids(self, class_name: str) -> list[int]:
        """Added-and-not-released ids of the class and its subclasses, id order."""
        self._require_class(class_name)
        ids = list(self.instances_by_class[class_name])
        for sub in self._subclasses[class_name]:
            ids.extend(self.instances_by_class[sub])
        ids.sort()
        return ids

    # -- object operations -----------------------------------------------------
    def find_object(self, class_name: str, predicate: Optional[Predicate] = None) -> Value:
        for oid in self.live_instance_ids(class_name):
            ref = RefV(oid)
            if predicate is None or predicate(ref):
                return ref
        return UNDEFINED

    def find_objects(self, class_name: str, predicate: Optional[Predicate] = None) -> RefSetV:
        out = []
        for oid in self.live_instance_ids(class_name):
            ref = RefV(oid)
            if predicate is None or predicate(ref):
                out.append(oid)
        return RefSetV(tuple(out))

    def create_object(self, class_name: str) -> RefV:
        info = self._require_class(class_name)
        oid = self.next_id
        self.next_id += 1
        attrs: dict[str, Value] = {a: UNDEFINED for (a, _t) in info.attrs}
        links: dict[str, Optional[int] | list[int]] = {}
        for (role, _tgt, mult) in info.roles:
            links[role] = None if mult == "one" else []
        self.records[oid] = ObjectRecord(oid, class_name, attrs, links)
        return RefV(oid)

    def add_object(self, class_name: str, ref: RefV) -> BoolV:
        self._require_class(class_name)
        rec = self._live(ref)
        if not self._conforms(rec.class_name, class_name):
            raise StoreTypeMismatch(
                f"object #{ref.object_id} is a {rec.class_name}, not a {class_name}")
        bucket = self.instances_by_class[rec.class_name]
        if ref.object_id in bucket:
            return BoolV(False)
        bucket.append(ref.object_id)
        return BoolV(True)

    def release_object(self, class_name: str, ref: RefV) -> BoolV:
        self._require_class(class_name)
        rec = self.records.get(ref.object_id)
        if rec is None:
            return BoolV(False)
        bucket = self.instances_by_class[rec.class_name]
        if ref.object_id not in bucket:
            return BoolV(False)
        bucket.remove(ref.object_id)
        del self.records[ref.object_id]
        for other in self.records.values():
            for role, val in other.links.items():
                if isinstance(val, list):
                    if ref.object_id in val:
                        val.remove(ref.object_id)
                elif val == ref.object_id:
                    other.links[role] = None
        return BoolV(True)

    # -- attribute operations ----------------------------------------------------
    def get_attribute(self, ref: RefV, attr_name: str) -> Value:
        rec = self._live(ref)
        if attr_name not in rec.attributes:
            raise UnknownAttribute(f"{rec.class_name!r} has no attribute {attr_name!r}")
        return rec.attributes[attr_name]

    def set_attribute(self, ref: RefV, attr_name: str, value: Value) -> BoolV:
        rec = self._live(ref)
        info = self.schema[rec.class_name]
        decl = info.attr_type(attr_name)
        if decl is None:
            raise UnknownAttribute(f"{rec.class_name!r} has no attribute {attr_name!r}")
        rec.attributes[attr_name] = self._coerce(value, decl, attr_name)
        return BoolV(True)

    def _coerce(self, value: Value, decl: str, attr_name: str) -> Value:
        if value is UNDEFINED:
            return value
        if decl == "Integer" and isinstance(value, IntV):
            return value
        if decl == "Real":
            if isinstance(value, RealV):
                return value
            if isinstance(value, IntV):
                return RealV(float(value.value))
        if decl == "Boolean" and isinstance(value, BoolV):
            return value
        if decl == "String" and isinstance(value, StrV):
            return value
        raise StoreTypeMismatch(
            f"cannot store {type(value).__name__} into {decl} attribute {attr_name!r}")

    # -- link operations -----------------------------------------------------------
    def _role(self, rec: ObjectRecord, role_name: str) -> tuple[str, str]:
        info = self.schema[rec.class_name]
        role = info.role(role_name)
        if role is None:
            raise UnknownRole(f"{rec.class_name!r} has no role {role_name!r}")
        return role

    def find_linked_object(self, ref: RefV, role_name: str) -> Value:
        rec = self._live(ref)
        _tgt, mult = self._role(rec, role_name)
        if mult != "one":
            raise MultiplicityMismatch(f"role {role_name!r} is many-valued")
        val = rec.links[role_name]
        return UNDEFINED if val is None else RefV(val)

    def find_linked_objects(self, ref: RefV, role_name: str,
                            predicate: Optional[Predicate] = None) -> RefSetV:
        rec = self._live(ref)
        _tgt, mult = self._role(rec, role_name)
        if mult != "many":
            raise MultiplicityMismatch(f"role {role_name!r} is one-valued")
        out = []
        for oid in rec.links[role_name]:
            target = RefV(oid)
            if predicate is None or predicate(target):
                out.append(oid)
        return RefSetV(tuple(out))

    def add_link_one_to_many(self, ref: RefV, role_name: str, target: RefV) -> BoolV:
        rec = self._live(ref)
        tgt_class, mult = self._role(rec, role_name)
        if mult != "many":
            raise MultiplicityMismatch(f"role {role_name!r} is one-valued")
        target_rec = self._live(target)
        if not self._conforms(target_rec.class_name, tgt_class):
            raise StoreTypeMismatch(
                f"role {role_name!r} links to {tgt_class!r}, not {target_rec.class_name!r}")
        bucket = rec.links[role_name]
        if target.object_id in bucket:
            return BoolV(False)
        bucket.append(target.object_id)
        return BoolV(True)

    def add_link_one_to_one(self, ref: RefV, role_name: str, target: RefV) -> BoolV:
        rec = self._live(ref)
        tgt_class, mult = self._role(rec, role_name)
        if mult != "one":
            raise MultiplicityMismatch(f"role {role_name!r} is many-valued")
        target_rec = self._live(target)
        if not self._conforms(target_rec.class_name, tgt_class):
            raise StoreTypeMismatch(
                f"role {role_name!r} links to {tgt_class!r}, not {target_rec.class_name!r}")
        rec.links[role_name] = target.object_id
        return BoolV(True)

    def remove_link_one_to_many(self, ref: RefV, role_name: str, target: RefV) -> BoolV:
        rec = self._live(ref)
        _tgt, mult = self._role(rec, role_name)
        if mult != "many":
            raise MultiplicityMismatch(f"role {role_name!r} is one-valued")
        bucket = rec.links[role_name]
        if target.object_id not in bucket:
            return BoolV(False)
        bucket.remove(target.object_id)
        return BoolV(True)

    def remove_link_one_to_one(self, ref: RefV, role_name: str) -> BoolV:
        rec = self._live(ref)
        _tgt, mult = self._role(rec, role_name)
        if mult != "one":
            raise MultiplicityMismatch(f"role {role_name!r} is many-valued")
        rec.links[role_name] = None
        return BoolV(True)

    # -- whole-store operations ---------------------------------------------------
    def copy(self) -> "ObjectStore":
        dup = ObjectStore.__new__(ObjectStore)
        dup.schema = self.schema
        dup.class_order = self.class_order
        dup.tolerance = self.tolerance
        dup.records = {oid: rec.copy() for oid, rec in self.records.items()}
        dup.instances_by_class = {c: list(ids) for c, ids in self.instances_by_class.items()}
        dup.next_id = self.next_id
        dup._subclasses = self._subclasses
        return dup

    def restore(self, snapshot: "ObjectStore") -> None:
        self.records = {oid: rec.copy() for oid, rec in snapshot.records.items()}
        self.instances_by_class = {c: list(ids) for c, ids in snapshot.instances_by_class.items()}
        self.next_id = snapshot.next_id

    def object_counts(self) -> dict[str, int]:
        return {c: len(self.instances_by_class[c]) for c in self.class_order}
