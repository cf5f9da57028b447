"""HTTP facade over the executor: list operations, open sessions, invoke,
observe state and invariants, save/load checkpoints, and serve the static UI.

All invocations funnel through one lock around the single executor, so
responses never observe partial state. The typed-value wire encoding is the
checkpoint encoding; there is exactly one serializer.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .checkpoint import CheckpointError, load_store, save_store
from .decomposer import CompiledModel
from .executor import (
    Executor, HookUnbound, InvokeError, Ok, PreconditionViolated, RuntimeFault,
    Session,
)
from .wire import WireFormatError, decode_value, encode_value

DEFAULT_PORT = 7468


class ServiceApp:
    """Transport-independent request handling; every method returns
    (http_status, body) where body is a JSON-able object or raw text."""

    def __init__(self, compiled: Optional[CompiledModel] = None,
                 executor: Optional[Executor] = None):
        self.lock = threading.Lock()
        self.executor: Optional[Executor] = None
        self.sessions: dict[str, Session] = {}
        self._next_session = 1
        if executor is not None:
            self.executor = executor
        elif compiled is not None:
            self.executor = Executor(compiled)

    # -- helpers ---------------------------------------------------------
    def _loaded(self) -> Optional[tuple[int, dict]]:
        if self.executor is None:
            return 503, {"error": "no model loaded"}
        return None

    # -- endpoints ---------------------------------------------------------
    def model_summary(self) -> tuple[int, object]:
        if (err := self._loaded()) is not None:
            return err
        compiled = self.executor.compiled
        resolved = compiled.resolved
        use_cases = []
        for uc in resolved.use_cases:
            ops = []
            for opname in uc.operations:
                op = compiled.operations[(uc.name, opname)]
                ops.append({
                    "name": opname,
                    "params": [{"name": n, "type": str(t)} for (n, t) in op.param_types],
                    "returnType": str(op.return_type) if op.return_type else None,
                    "executable": op.executable,
                    "hooks": [h.name for h in op.hooks],
                })
            use_cases.append({
                "name": uc.name,
                "primaryActor": uc.primary_actor,
                "synthesized": all(
                    compiled.operations[(uc.name, o)].synthesized for o in uc.operations),
                "operations": ops,
            })
        classes = []
        for cname in resolved.class_order:
            info = resolved.classes[cname]
            classes.append({
                "name": cname,
                "superClass": info.super_class,
                "crud": info.crud_marked,
                "attributes": [{"name": n, "type": t} for (n, t) in info.attrs],
                "roles": [{"name": r, "target": t, "multiplicity": m}
                          for (r, t, m) in info.roles],
            })
        return 200, {
            "actors": list(resolved.model.actors),
            "useCases": use_cases,
            "classes": classes,
            "invariants": [inv.name for inv in resolved.invariants],
        }

    def create_session(self, body: object) -> tuple[int, object]:
        if (err := self._loaded()) is not None:
            return err
        if not isinstance(body, dict) or not isinstance(body.get("useCase"), str):
            return 400, {"error": "body must be {\"useCase\": name}"}
        uc = body["useCase"]
        with self.lock:
            try:
                session = self.executor.create_session(uc)
            except InvokeError as e:
                return 404, {"error": str(e)}
            sid = f"s{self._next_session}"
            self._next_session += 1
            self.sessions[sid] = session
        return 200, {"sessionId": sid}

    def invoke(self, body: object) -> tuple[int, object]:
        if (err := self._loaded()) is not None:
            return err
        if not isinstance(body, dict):
            return 400, {"error": "invoke body must be an object"}
        sid = body.get("sessionId")
        opname = body.get("operation")
        raw_args = body.get("args", [])
        if not isinstance(sid, str) or not isinstance(opname, str) or not isinstance(raw_args, list):
            return 400, {"error": "invoke body needs sessionId, operation, args"}
        with self.lock:
            session = self.sessions.get(sid)
            if session is None:
                return 404, {"error": f"unknown session {sid!r}"}
            if "useCase" in body and body["useCase"] != session.use_case:
                return 400, {"error": f"session {sid!r} belongs to use case "
                                      f"{session.use_case!r}, not {body['useCase']!r}"}
            if (session.use_case, opname) not in self.executor.compiled.operations:
                return 404, {"error": f"use case {session.use_case!r} has no "
                                      f"operation {opname!r}"}
            try:
                args = [decode_value(a) for a in raw_args]
            except WireFormatError as e:
                return 400, {"error": str(e)}
            try:
                outcome = self.executor.invoke(session, opname, args)
            except InvokeError as e:
                return 400, {"error": str(e)}
        if isinstance(outcome, Ok):
            return 200, {
                "kind": "ok",
                "value": encode_value(outcome.value),
                "invariants": _invariants_doc(outcome.invariants),
            }
        if isinstance(outcome, PreconditionViolated):
            return 200, {"kind": "precondition_violated", "guard": outcome.guard_text}
        if isinstance(outcome, HookUnbound):
            return 200, {"kind": "hook_unbound", "hook": outcome.hook_name}
        assert isinstance(outcome, RuntimeFault)
        return 200, {"kind": "fault", "message": outcome.message}

    def state(self) -> tuple[int, object]:
        if (err := self._loaded()) is not None:
            return err
        with self.lock:
            store = self.executor.store
            counts = store.object_counts()
            attribute_table: dict[str, list] = {}
            link_table: list[dict] = []
            for cname in store.class_order:
                rows = []
                for oid in store.instances_by_class[cname]:
                    rec = store.records[oid]
                    rows.append({
                        "id": oid,
                        "attrs": {a: encode_value(v) for a, v in rec.attributes.items()},
                    })
                attribute_table[cname] = rows
            for oid in sorted(store.records):
                rec = store.records[oid]
                info = store.schema[rec.class_name]
                for (role, _tgt, mult) in info.roles:
                    val = rec.links[role]
                    targets = val if isinstance(val, list) else ([] if val is None else [val])
                    if targets:
                        link_table.append({
                            "sourceId": oid,
                            "role": role,
                            "targetIds": list(targets),
                            "multiplicity": mult,
                        })
        return 200, {
            "objectCounts": counts,
            "attributeTable": attribute_table,
            "linkTable": link_table,
        }

    def invariants(self) -> tuple[int, object]:
        if (err := self._loaded()) is not None:
            return err
        with self.lock:
            report = self.executor.check_invariants()
        return 200, {"invariants": _invariants_doc(report)}

    def checkpoint_save(self) -> tuple[int, object]:
        if (err := self._loaded()) is not None:
            return err
        with self.lock:
            return 200, save_store(self.executor.store)

    def checkpoint_load(self, text: str) -> tuple[int, object]:
        if (err := self._loaded()) is not None:
            return err
        with self.lock:
            try:
                new_store = load_store(text, self.executor.store)
            except CheckpointError as e:
                return 422, {"error": str(e)}
            self.executor.store = new_store
            self.executor.last_trace = None
            self.sessions.clear()
        return 200, {"ok": True}


def _invariants_doc(report) -> list[dict]:
    return [
        {"name": e.name, "holds": e.holds, "witnesses": list(e.witnesses),
         **({"note": e.note} if e.note else {})}
        for e in report.entries
    ]


_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".svg": "image/svg+xml",
}


def make_handler(app: ServiceApp, ui_root: Optional[Path]):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # keep test output quiet
            pass

        def _send(self, status: int, body: object) -> None:
            if isinstance(body, str):
                payload = body.encode("utf-8")
            else:
                payload = (json.dumps(body) + "\n").encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def _read_body(self) -> str:
            length = int(self.headers.get("Content-Length") or 0)
            return self.rfile.read(length).decode("utf-8") if length else ""

        def _json_body(self) -> object:
            raw = self._read_body()
            if not raw:
                return {}
            return json.loads(raw)

        def do_GET(self) -> None:
            path = self.path.split("?", 1)[0]
            if path == "/model":
                self._send(*app.model_summary())
            elif path == "/state":
                self._send(*app.state())
            elif path == "/invariants":
                self._send(*app.invariants())
            elif path == "/ui" or path.startswith("/ui/"):
                self._serve_ui(path)
            else:
                self._send(404, {"error": f"no such endpoint {path}"})

        def do_POST(self) -> None:
            path = self.path.split("?", 1)[0]
            try:
                if path == "/sessions":
                    self._send(*app.create_session(self._json_body()))
                elif path == "/invoke":
                    self._send(*app.invoke(self._json_body()))
                elif path == "/checkpoint/save":
                    self._send(*app.checkpoint_save())
                elif path == "/checkpoint/load":
                    self._send(*app.checkpoint_load(self._read_body()))
                else:
                    self._send(404, {"error": f"no such endpoint {path}"})
            except json.JSONDecodeError as e:
                self._send(400, {"error": f"invalid JSON body: {e}"})

        def _serve_ui(self, path: str) -> None:
            if ui_root is None or not ui_root.is_dir():
                self._send(404, {"error": "UI assets not built; see frontend/README.md"})
                return
            rel = path[len("/ui"):].lstrip("/") or "index.html"
            target = (ui_root / rel).resolve()
            if not str(target).startswith(str(ui_root.resolve())) or not target.is_file():
                self._send(404, {"error": f"no such asset {rel}"})
                return
            payload = target.read_bytes()
            ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

    return Handler


def make_server(app: ServiceApp, port: int = DEFAULT_PORT,
                ui_root: Optional[Path] = None, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    handler = make_handler(app, ui_root)
    return ThreadingHTTPServer((host, port), handler)
