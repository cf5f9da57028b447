"""Object-store semantics, checked example by example and then against a
brute-force shadow model over randomized operation sequences."""

import random

import pytest

from conftest import build_text
from reqexec.model import BoolV, IntV, RealV, RefV, StrV, UNDEFINED
from reqexec.store import (
    DanglingRef, ObjectStore, StoreTypeMismatch, UnknownAttribute, UnknownClass,
    UnknownRole, MultiplicityMismatch,
)

SCHEMA_TEXT = '''
actor A
class Base { Name: String; }
class Derived extends Base { Extra: Integer; }
class Item { Barcode: String; Price: Real; }
assoc Base.Friends -> Item [many]
assoc Item.Owner -> Base [one]
'''


@pytest.fixture
def store() -> ObjectStore:
    compiled = build_text(SCHEMA_TEXT)
    return ObjectStore.for_model(compiled.resolved)


def _added(store, class_name):
    ref = store.create_object(class_name)
    store.add_object(class_name, ref)
    return ref


def barcode_is(store, text):
    return lambda ref: store.get_attribute(ref, "Barcode") == StrV(text)


class TestFindObject:
    def test_first_match_in_creation_order(self, store):
        a = _added(store, "Item")
        b = _added(store, "Item")
        store.set_attribute(a, "Barcode", StrV("A"))
        store.set_attribute(b, "Barcode", StrV("B"))
        assert store.find_object("Item", barcode_is(store, "B")) == b

    def test_empty_store_undefined(self, store):
        assert store.find_object("Item", lambda r: True) is UNDEFINED

    def test_tie_break_is_earliest_created(self, store):
        # hand-simulated oracle: with both objects matching, the survivor of
        # any probe order must be the lower id
        a = _added(store, "Item")
        b = _added(store, "Item")
        for ref in (a, b):
            store.set_attribute(ref, "Barcode", StrV("X"))
        winner = store.find_object("Item", barcode_is(store, "X"))
        assert winner == RefV(min(a.object_id, b.object_id))

    def test_unknown_class(self, store):
        with pytest.raises(UnknownClass):
            store.find_object("NoSuchClass", None)


class TestFindObjects:
    def test_all_without_condition(self, store):
        ids = [_added(store, "Item").object_id for _ in range(3)]
        assert list(store.find_objects("Item").ids) == ids

    def test_filtered_sublist_keeps_order(self, store):
        refs = [_added(store, "Item") for _ in range(4)]
        for i, r in enumerate(refs):
            store.set_attribute(r, "Price", RealV(float(i)))
        picked = store.find_objects(
            "Item", lambda r: store.get_attribute(r, "Price").value >= 2.0)
        assert list(picked.ids) == [refs[2].object_id, refs[3].object_id]

    def test_empty(self, store):
        assert store.find_objects("Item").ids == ()


class TestCreateAdd:
    def test_created_object_not_listed_until_added(self, store):
        ref = store.create_object("Item")
        assert ref.object_id not in store.find_objects("Item").ids
        assert store.add_object("Item", ref) == BoolV(True)
        assert ref.object_id in store.find_objects("Item").ids

    def test_ids_strictly_increase(self, store):
        a = store.create_object("Item")
        b = store.create_object("Item")
        assert b.object_id > a.object_id

    def test_create_unknown_class(self, store):
        with pytest.raises(UnknownClass):
            store.create_object("NoSuchClass")

    def test_double_add_returns_false(self, store):
        ref = store.create_object("Item")
        assert store.add_object("Item", ref) == BoolV(True)
        assert store.add_object("Item", ref) == BoolV(False)
        assert list(store.find_objects("Item").ids) == [ref.object_id]

    def test_subclass_visible_through_superclass(self, store):
        d = store.create_object("Derived")
        assert store.add_object("Base", d) == BoolV(True)
        assert d.object_id in store.find_objects("Base").ids
        assert d.object_id in store.find_objects("Derived").ids

    def test_add_wrong_class(self, store):
        item = store.create_object("Item")
        with pytest.raises(StoreTypeMismatch):
            store.add_object("Base", item)


class TestRelease:
    def test_release_shrinks_instances(self, store):
        ref = _added(store, "Item")
        assert store.release_object("Item", ref) == BoolV(True)
        assert store.find_objects("Item").ids == ()

    def test_release_twice_false(self, store):
        ref = _added(store, "Item")
        store.release_object("Item", ref)
        assert store.release_object("Item", ref) == BoolV(False)

    def test_release_severs_inbound_links(self, store):
        # three-object graph enumerated by hand: base -Friends-> {i1, i2},
        # i1 -Owner-> base, i2 -Owner-> base
        base = _added(store, "Base")
        i1 = _added(store, "Item")
        i2 = _added(store, "Item")
        store.add_link_one_to_many(base, "Friends", i1)
        store.add_link_one_to_many(base, "Friends", i2)
        store.add_link_one_to_one(i1, "Owner", base)
        store.add_link_one_to_one(i2, "Owner", base)
        store.release_object("Item", i1)
        assert list(store.find_linked_objects(base, "Friends").ids) == [i2.object_id]
        store.release_object("Base", base)
        assert store.find_linked_object(i2, "Owner") is UNDEFINED
        for rec in store.records.values():
            for val in rec.links.values():
                targets = val if isinstance(val, list) else ([] if val is None else [val])
                for t in targets:
                    assert t in store.records


class TestAttributes:
    def test_read_after_set(self, store):
        ref = _added(store, "Item")
        store.set_attribute(ref, "Price", RealV(3.5))
        assert store.get_attribute(ref, "Price") == RealV(3.5)

    def test_unset_attribute_undefined(self, store):
        ref = _added(store, "Item")
        assert store.get_attribute(ref, "Price") is UNDEFINED

    def test_inherited_attribute_on_subclass(self, store):
        d = _added(store, "Derived")
        store.set_attribute(d, "Name", StrV("n"))
        assert store.get_attribute(d, "Name") == StrV("n")
        assert store.get_attribute(d, "Extra") is UNDEFINED

    def test_integer_widens_into_real(self, store):
        ref = _added(store, "Item")
        store.set_attribute(ref, "Price", IntV(3))
        assert store.get_attribute(ref, "Price") == RealV(3.0)

    def test_string_into_real_rejected(self, store):
        ref = _added(store, "Item")
        with pytest.raises(StoreTypeMismatch):
            store.set_attribute(ref, "Price", StrV("3"))

    def test_overwrite_last_wins(self, store):
        ref = _added(store, "Item")
        store.set_attribute(ref, "Price", RealV(1.0))
        store.set_attribute(ref, "Price", RealV(2.0))
        assert store.get_attribute(ref, "Price") == RealV(2.0)

    def test_unknown_attribute(self, store):
        ref = _added(store, "Item")
        with pytest.raises(UnknownAttribute):
            store.get_attribute(ref, "Nope")

    def test_dangling_get(self, store):
        ref = _added(store, "Item")
        store.release_object("Item", ref)
        with pytest.raises(DanglingRef):
            store.get_attribute(ref, "Price")


class TestLinks:
    def test_many_append_and_navigate(self, store):
        base = _added(store, "Base")
        item = _added(store, "Item")
        assert store.add_link_one_to_many(base, "Friends", item) == BoolV(True)
        assert list(store.find_linked_objects(base, "Friends").ids) == [item.object_id]

    def test_duplicate_append_false(self, store):
        base = _added(store, "Base")
        item = _added(store, "Item")
        store.add_link_one_to_many(base, "Friends", item)
        assert store.add_link_one_to_many(base, "Friends", item) == BoolV(False)
        assert len(store.find_linked_objects(base, "Friends").ids) == 1

    def test_one_overwrite(self, store):
        b1 = _added(store, "Base")
        b2 = _added(store, "Base")
        item = _added(store, "Item")
        store.add_link_one_to_one(item, "Owner", b1)
        store.add_link_one_to_one(item, "Owner", b2)
        assert store.find_linked_object(item, "Owner") == b2

    def test_unlinked_one_role_undefined(self, store):
        item = _added(store, "Item")
        assert store.find_linked_object(item, "Owner") is UNDEFINED

    def test_filtered_many_navigation(self, store):
        base = _added(store, "Base")
        items = [_added(store, "Item") for _ in range(3)]
        for price, item in zip((1.0, 5.0, 9.0), items):
            store.set_attribute(item, "Price", RealV(price))
            store.add_link_one_to_many(base, "Friends", item)
        picked = store.find_linked_objects(
            base, "Friends", lambda r: store.get_attribute(r, "Price").value > 2)
        assert list(picked.ids) == [items[1].object_id, items[2].object_id]

    def test_remove_many(self, store):
        base = _added(store, "Base")
        item = _added(store, "Item")
        store.add_link_one_to_many(base, "Friends", item)
        assert store.remove_link_one_to_many(base, "Friends", item) == BoolV(True)
        assert store.remove_link_one_to_many(base, "Friends", item) == BoolV(False)

    def test_remove_one_idempotent(self, store):
        item = _added(store, "Item")
        base = _added(store, "Base")
        store.add_link_one_to_one(item, "Owner", base)
        assert store.remove_link_one_to_one(item, "Owner") == BoolV(True)
        assert store.find_linked_object(item, "Owner") is UNDEFINED
        assert store.remove_link_one_to_one(item, "Owner") == BoolV(True)

    def test_multiplicity_mismatch(self, store):
        base = _added(store, "Base")
        item = _added(store, "Item")
        with pytest.raises(MultiplicityMismatch):
            store.add_link_one_to_one(base, "Friends", item)
        with pytest.raises(MultiplicityMismatch):
            store.add_link_one_to_many(item, "Owner", base)

    def test_unknown_role(self, store):
        item = _added(store, "Item")
        with pytest.raises(UnknownRole):
            store.find_linked_object(item, "Nothing")


# ---------------------------------------------------------------------------
# Shadow-model property: replay random operation sequences against a naive
# list-based model and compare every observable after every step.
# ---------------------------------------------------------------------------

class Shadow:
    """Deliberately naive reimplementation used as an oracle."""

    def __init__(self):
        self.objects = {}   # id -> (class, attrs dict, links dict)
        self.listed = []    # ids in add order
        self.next_id = 1

    def create(self, cls):
        oid = self.next_id
        self.next_id += 1
        links = {"Friends": []} if cls in ("Base", "Derived") else {"Owner": None}
        self.objects[oid] = [cls, {}, links]
        return oid

    def add(self, oid):
        if oid in self.listed:
            return False
        self.listed.append(oid)
        return True

    def release(self, oid):
        if oid not in self.listed:
            return False
        self.listed.remove(oid)
        del self.objects[oid]
        for (_c, _a, links) in self.objects.values():
            if "Friends" in links and oid in links["Friends"]:
                links["Friends"].remove(oid)
            if links.get("Owner") == oid:
                links["Owner"] = None
        return True

    def all_instances(self, cls):
        subs = {"Base": ("Base", "Derived"), "Derived": ("Derived",), "Item": ("Item",)}[cls]
        return sorted(o for o in self.listed if self.objects[o][0] in subs)


def test_against_shadow_model():
    compiled = build_text(SCHEMA_TEXT)
    rng = random.Random(42)
    for _trial in range(40):
        store = ObjectStore.for_model(compiled.resolved)
        shadow = Shadow()
        live_refs: list[RefV] = []
        for _step in range(60):
            op = rng.randrange(6)
            if op == 0 or not live_refs:
                cls = rng.choice(["Base", "Derived", "Item"])
                ref = store.create_object(cls)
                oid = shadow.create(cls)
                assert ref.object_id == oid
                live_refs.append(ref)
            elif op == 1:
                ref = rng.choice(live_refs)
                cls = store.records[ref.object_id].class_name
                assert store.add_object(cls, ref).value == shadow.add(ref.object_id)
            elif op == 2:
                ref = rng.choice(live_refs)
                cls = shadow.objects.get(ref.object_id, ["Item"])[0]
                if ref.object_id in store.records:
                    assert store.release_object(cls, ref).value == shadow.release(ref.object_id)
                    if ref.object_id not in store.records:
                        live_refs = [r for r in live_refs if r.object_id != ref.object_id]
            elif op == 3:
                bases = [r for r in live_refs
                         if store.records.get(r.object_id)
                         and store.records[r.object_id].class_name in ("Base", "Derived")]
                items = [r for r in live_refs
                         if store.records.get(r.object_id)
                         and store.records[r.object_id].class_name == "Item"]
                if bases and items:
                    b, i = rng.choice(bases), rng.choice(items)
                    got = store.add_link_one_to_many(b, "Friends", i).value
                    friends = shadow.objects[b.object_id][2]["Friends"]
                    expected = i.object_id not in friends
                    if expected:
                        friends.append(i.object_id)
                    assert got == expected
            elif op == 4:
                items = [r for r in live_refs
                         if store.records.get(r.object_id)
                         and store.records[r.object_id].class_name == "Item"]
                bases = [r for r in live_refs
                         if store.records.get(r.object_id)
                         and store.records[r.object_id].class_name in ("Base", "Derived")]
                if items and bases:
                    i, b = rng.choice(items), rng.choice(bases)
                    store.add_link_one_to_one(i, "Owner", b)
                    shadow.objects[i.object_id][2]["Owner"] = b.object_id
            else:
                pass
            for cls in ("Base", "Derived", "Item"):
                assert list(store.find_objects(cls).ids) == shadow.all_instances(cls), \
                    f"allInstances({cls}) diverged"
            for rec in store.records.values():
                for val in rec.links.values():
                    targets = val if isinstance(val, list) else ([] if val is None else [val])
                    for t in targets:
                        assert t in store.records, "referential integrity broken"
