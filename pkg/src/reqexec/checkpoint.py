"""Checkpoint serialization for object stores.

The document is canonical JSON (sorted keys, compact separators, objects in id
order) so saving the same store twice yields byte-identical text. Instance-list
membership and insertion order are recorded separately from the records: an
object created inside a plan but never added to its class list is still part
of the graph and must survive a round trip.
"""

from __future__ import annotations

import json

from .model import UNDEFINED
from .store import ObjectRecord, ObjectStore
from .wire import WireFormatError, decode_value, encode_value


class CheckpointError(Exception):
    pass


def save_store(store: ObjectStore) -> str:
    objects = []
    for oid in sorted(store.records):
        rec = store.records[oid]
        links: dict[str, object] = {}
        for role, val in rec.links.items():
            links[role] = list(val) if isinstance(val, list) else val
        objects.append({
            "id": oid,
            "class": rec.class_name,
            "attrs": {a: encode_value(v) for a, v in rec.attributes.items()},
            "links": links,
        })
    doc = {
        "nextId": store.next_id,
        "instances": {c: list(ids) for c, ids in store.instances_by_class.items()},
        "objects": objects,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def load_store(text: str, template: ObjectStore) -> ObjectStore:
    """Build a fresh store (same schema/tolerance as `template`) from a document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise CheckpointError(f"not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise CheckpointError("checkpoint document must be an object")
    for key in ("nextId", "instances", "objects"):
        if key not in doc:
            raise CheckpointError(f"checkpoint document is missing {key!r}")

    store = ObjectStore(template.schema, template.class_order, template.tolerance)
    next_id = doc["nextId"]
    if not isinstance(next_id, int) or next_id < 1:
        raise CheckpointError(f"bad nextId: {next_id!r}")

    objects = doc["objects"]
    if not isinstance(objects, list):
        raise CheckpointError("objects must be a list")
    for entry in objects:
        if not isinstance(entry, dict):
            raise CheckpointError("object entries must be objects")
        oid = entry.get("id")
        cname = entry.get("class")
        if not isinstance(oid, int) or oid < 1:
            raise CheckpointError(f"bad object id: {oid!r}")
        if oid in store.records:
            raise CheckpointError(f"duplicate object id {oid}")
        if oid >= next_id:
            raise CheckpointError(f"object id {oid} is not below nextId {next_id}")
        info = store.schema.get(cname) if isinstance(cname, str) else None
        if info is None:
            raise CheckpointError(f"object #{oid} has unknown class {cname!r}")
        declared_attrs = dict(info.attrs)
        attrs_doc = entry.get("attrs")
        if not isinstance(attrs_doc, dict):
            raise CheckpointError(f"object #{oid} has no attrs map")
        attrs = {}
        for an, _at in info.attrs:
            if an in attrs_doc:
                try:
                    attrs[an] = decode_value(attrs_doc[an])
                except WireFormatError as err:
                    raise CheckpointError(f"object #{oid} attr {an!r}: {err}") from None
            else:
                attrs[an] = UNDEFINED
        for an in attrs_doc:
            if an not in declared_attrs:
                raise CheckpointError(f"object #{oid} has undeclared attribute {an!r}")
        links_doc = entry.get("links")
        if not isinstance(links_doc, dict):
            raise CheckpointError(f"object #{oid} has no links map")
        links: dict[str, object] = {}
        declared_roles = {r: mult for (r, _t, mult) in info.roles}
        for (role, _tgt, mult) in info.roles:
            val = links_doc.get(role)
            if mult == "one":
                if val is not None and (not isinstance(val, int) or isinstance(val, bool)):
                    raise CheckpointError(f"object #{oid} role {role!r} must be an id or null")
                links[role] = val
            else:
                if val is None:
                    val = []
                if not isinstance(val, list) or any(
                        not isinstance(i, int) or isinstance(i, bool) for i in val):
                    raise CheckpointError(f"object #{oid} role {role!r} must be an id list")
                links[role] = list(val)
        for role in links_doc:
            if role not in declared_roles:
                raise CheckpointError(f"object #{oid} has undeclared role {role!r}")
        store.records[oid] = ObjectRecord(oid, cname, attrs, links)  # type: ignore[arg-type]

    for rec in store.records.values():
        for role, val in rec.links.items():
            targets = val if isinstance(val, list) else ([] if val is None else [val])
            for t in targets:
                if t not in store.records:
                    raise CheckpointError(
                        f"object #{rec.object_id} role {role!r} links to missing object #{t}")

    instances = doc["instances"]
    if not isinstance(instances, dict):
        raise CheckpointError("instances must be a map")
    for cname, ids in instances.items():
        if cname not in store.instances_by_class:
            raise CheckpointError(f"instances map names unknown class {cname!r}")
        if not isinstance(ids, list):
            raise CheckpointError(f"instances of {cname!r} must be a list")
        seen = set()
        for oid in ids:
            rec = store.records.get(oid) if isinstance(oid, int) else None
            if rec is None:
                raise CheckpointError(f"instance list of {cname!r} names missing object {oid!r}")
            if rec.class_name != cname:
                raise CheckpointError(
                    f"object #{oid} is a {rec.class_name}, listed under {cname!r}")
            if oid in seen:
                raise CheckpointError(f"object #{oid} listed twice under {cname!r}")
            seen.add(oid)
        store.instances_by_class[cname] = list(ids)

    store.next_id = next_id
    return store


def stores_isomorphic(a: ObjectStore, b: ObjectStore) -> bool:
    """Identity-preserving graph equality: same records, attributes, links,
    instance lists, and id counter."""
    return save_store(a) == save_store(b)
