"""Command-line entry point.

Exit codes are a stable contract for CI: 0 success, 1 model errors,
2 environment errors (unreadable files, busy ports, bad flags).
"""

from __future__ import annotations

import argparse
import os
import signal
import sys
import time
from pathlib import Path
from typing import Optional

from .analyzer import executability, report
from .checkpoint import CheckpointError, load_store, save_store
from .decomposer import CompiledModel, render_trace
from .executor import (
    Executor, HookUnbound, InvokeError, Ok, PreconditionViolated, RuntimeFault,
    Session,
)
from .model import (
    BoolV, IntV, RealV, StrV, UNDEFINED, Value, value_repr,
)
from .parser import tokenize
from .pipeline import BuildError, build_from_paths
from .service import DEFAULT_PORT, ServiceApp, make_server

EXIT_OK = 0
EXIT_MODEL_ERROR = 1
EXIT_ENV_ERROR = 2


def _tolerance(args) -> float:
    if args.tolerance is not None:
        return args.tolerance
    env = os.environ.get("REQEXEC_TOLERANCE")
    if env:
        try:
            return float(env)
        except ValueError:
            raise SystemExit(f"reqexec: bad REQEXEC_TOLERANCE {env!r}")
    return 1e-9


def _build(args, out) -> Optional[CompiledModel]:
    try:
        return build_from_paths(args.files)
    except BuildError as err:
        for msg in err.messages:
            print(f"error: {msg}", file=out)
        return None


def cmd_check(args, out) -> int:
    compiled = _build(args, out)
    if compiled is None:
        return EXIT_MODEL_ERROR
    ex = executability(compiled, include_crud=args.include_crud)
    for s in ex.operations:
        if s.status != "executable":
            print(f"warning: {s.use_case}::{s.operation} partially executable "
                  f"(hooks: {', '.join(s.hooks)})", file=out)
    print(f"{ex.executable}/{ex.total} executable ({ex.success_rate:.1f}%)", file=out)
    if args.trace is not None:
        text = "".join(render_trace(op) for op in compiled.in_order()
                       if args.include_crud or not op.synthesized)
        if args.trace == "-":
            out.write(text)
        else:
            Path(args.trace).write_text(text, encoding="utf-8")
    return EXIT_OK


def cmd_metrics(args, out) -> int:
    compiled = _build(args, out)
    if compiled is None:
        return EXIT_MODEL_ERROR
    try:
        out.write(report(compiled, args.format, include_crud=args.include_crud))
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ENV_ERROR
    return EXIT_OK


def cmd_bench(args, out) -> int:
    total = 0.0
    for f in args.files:
        t0 = time.perf_counter()
        try:
            build_from_paths([f])
        except BuildError as err:
            for msg in err.messages:
                print(f"error: {msg}", file=out)
            return EXIT_MODEL_ERROR
        ms = (time.perf_counter() - t0) * 1000.0
        total += ms
        print(f"{f}: {ms:.2f} ms", file=out)
    print(f"total: {total:.2f} ms", file=out)
    return EXIT_OK


def cmd_serve(args, out) -> int:
    compiled = _build(args, out)
    if compiled is None:
        return EXIT_MODEL_ERROR
    app = ServiceApp(executor=Executor(compiled, tolerance=_tolerance(args)))
    ui_root = Path(args.ui) if args.ui else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    try:
        server = make_server(app, args.port, ui_root=ui_root, host=args.host)
    except OSError as err:
        print(f"error: cannot bind port {args.port}: {err}", file=out)
        return EXIT_ENV_ERROR

    def stop(_sig, _frame):
        raise KeyboardInterrupt

    signal.signal(signal.SIGTERM, stop)
    print(f"serving on http://{args.host}:{args.port} (UI at /ui)", file=out)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# REPL
# ---------------------------------------------------------------------------

def parse_repl_args(text: str) -> list[Value]:
    toks, diags = tokenize(text)
    if diags:
        raise ValueError(str(diags[0]))
    values: list[Value] = []
    i = 0
    while toks[i].kind != "eof":
        t = toks[i]
        neg = False
        if t.kind == "-":
            neg = True
            i += 1
            t = toks[i]
        if t.kind == "int":
            values.append(IntV(-int(t.text) if neg else int(t.text)))
        elif t.kind == "real":
            values.append(RealV(-float(t.text) if neg else float(t.text)))
        elif neg:
            raise ValueError(f"expected a number after '-', found {t.text!r}")
        elif t.kind == "string":
            values.append(StrV(t.text))
        elif t.kind == "ident" and t.text in ("true", "false"):
            values.append(BoolV(t.text == "true"))
        elif t.kind == "ident" and t.text == "null":
            values.append(UNDEFINED)
        else:
            raise ValueError(f"cannot read argument {t.text!r}")
        i += 1
    return values


class Repl:
    def __init__(self, compiled: CompiledModel, out, tolerance: float = 1e-9):
        self.compiled = compiled
        self.executor = Executor(compiled, tolerance=tolerance)
        self.sessions: dict[str, Session] = {}
        self.out = out

    def session_for(self, use_case: str) -> Session:
        if use_case not in self.sessions:
            self.sessions[use_case] = self.executor.create_session(use_case)
        return self.sessions[use_case]

    def emit(self, line: str) -> None:
        print(line, file=self.out)

    def handle(self, line: str) -> bool:
        """Run one command; False means quit."""
        line = line.strip()
        if not line or line.startswith("#"):
            return True
        parts = line.split(None, 1)
        cmd, rest = parts[0], parts[1] if len(parts) > 1 else ""
        try:
            if cmd in ("exit", "quit"):
                return False
            if cmd == "help":
                self.emit("commands: list | invoke <useCase> <op> [args...] | state [Class] "
                          "| invariants | trace <useCase> <op> | save <file> | load <file> | exit")
            elif cmd == "list":
                self.cmd_list()
            elif cmd == "invoke":
                self.cmd_invoke(rest)
            elif cmd == "state":
                self.cmd_state(rest.strip())
            elif cmd == "invariants":
                self.cmd_invariants()
            elif cmd == "trace":
                self.cmd_trace(rest)
            elif cmd == "save":
                Path(rest.strip()).write_text(save_store(self.executor.store), encoding="utf-8")
                self.emit(f"saved {rest.strip()}")
            elif cmd == "load":
                self.cmd_load(rest.strip())
            else:
                self.emit(f"error: unknown command {cmd!r} (try help)")
        except (ValueError, OSError, InvokeError, CheckpointError) as err:
            self.emit(f"error: {err}")
        return True

    def cmd_list(self) -> None:
        for uc in self.compiled.resolved.use_cases:
            self.emit(f"{uc.name} (actor {uc.primary_actor})")
            for opname in uc.operations:
                op = self.compiled.operations[(uc.name, opname)]
                params = ", ".join(f"{n}: {t}" for (n, t) in op.param_types)
                ret = f" : {op.return_type}" if op.return_type else ""
                suffix = "" if op.executable else f"  [hooks: {', '.join(h.name for h in op.hooks)}]"
                self.emit(f"  {opname}({params}){ret}{suffix}")

    def cmd_invoke(self, rest: str) -> None:
        parts = rest.split(None, 2)
        if len(parts) < 2:
            self.emit("error: usage: invoke <useCase> <op> [args...]")
            return
        uc, opname = parts[0], parts[1]
        args = parse_repl_args(parts[2]) if len(parts) > 2 else []
        session = self.session_for(uc)
        outcome = self.executor.invoke(session, opname, args)
        if isinstance(outcome, Ok):
            self.emit(f"ok {value_repr(outcome.value)}")
            for v in outcome.invariants.violations():
                self.emit(_invariant_line(v))
        elif isinstance(outcome, PreconditionViolated):
            self.emit(f"precondition violated: {outcome.guard_text}")
        elif isinstance(outcome, HookUnbound):
            self.emit(f"hook unbound: {outcome.hook_name}")
        elif isinstance(outcome, RuntimeFault):
            self.emit(f"fault: {outcome.message}")

    def cmd_state(self, class_name: str) -> None:
        store = self.executor.store
        if not class_name:
            for cname in store.class_order:
                self.emit(f"{cname}: {len(store.instances_by_class[cname])}")
            return
        if class_name not in store.schema:
            self.emit(f"error: unknown class {class_name!r}")
            return
        info = store.schema[class_name]
        for oid in store.instances_by_class[class_name]:
            rec = store.records[oid]
            attrs = " ".join(f"{a}={value_repr(rec.attributes[a])}" for (a, _t) in info.attrs)
            links = []
            for (role, _tgt, mult) in info.roles:
                val = rec.links[role]
                if isinstance(val, list):
                    if val:
                        links.append(f"{role}={{{', '.join(f'#{i}' for i in val)}}}")
                elif val is not None:
                    links.append(f"{role}=#{val}")
            suffix = (" " + " ".join(links)) if links else ""
            self.emit(f"#{oid} {attrs}{suffix}".rstrip())

    def cmd_invariants(self) -> None:
        for st in self.executor.check_invariants().entries:
            self.emit(f"{st.name} GREEN" if st.holds else _invariant_line(st))

    def cmd_trace(self, rest: str) -> None:
        parts = rest.split()
        if len(parts) != 2:
            self.emit("error: usage: trace <useCase> <op>")
            return
        op = self.compiled.operations.get((parts[0], parts[1]))
        if op is None:
            self.emit(f"error: no operation {parts[0]}::{parts[1]}")
            return
        self.out.write(render_trace(op))

    def cmd_load(self, path: str) -> None:
        text = Path(path).read_text(encoding="utf-8")
        self.executor.store = load_store(text, self.executor.store)
        self.executor.last_trace = None
        for s in self.sessions.values():
            s.bindings.clear()
        self.emit(f"loaded {path}")


def _invariant_line(st) -> str:
    if st.witnesses:
        ids = ", ".join(f"#{i}" for i in st.witnesses)
        return f"invariant {st.name} RED (witnesses: {ids})"
    return f"invariant {st.name} RED"


def cmd_run(args, out) -> int:
    compiled = _build(args, out)
    if compiled is None:
        return EXIT_MODEL_ERROR
    repl = Repl(compiled, out, tolerance=_tolerance(args))
    if args.checkpoint:
        try:
            repl.cmd_load(args.checkpoint)
        except (OSError, CheckpointError) as err:
            print(f"error: {err}", file=out)
            return EXIT_ENV_ERROR
    interactive = sys.stdin.isatty()
    while True:
        if interactive:
            out.write("> ")
            out.flush()
        line = sys.stdin.readline()
        if not line:
            break
        if not interactive:
            cmd = line.strip()
            if cmd and not cmd.startswith("#"):
                print(f"> {cmd}", file=out)
        if not repl.handle(line):
            break
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="reqexec",
        description="Parse, compile, and interactively execute requirements models.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, files=True):
        if files:
            p.add_argument("files", nargs="+", help="model source files (.rqm)")
        p.add_argument("--tolerance", type=float, default=None,
                       help="absolute tolerance for Real equality (default 1e-9, "
                            "or REQEXEC_TOLERANCE)")

    p_check = sub.add_parser("check", help="parse, resolve, and compile; report executability")
    common(p_check)
    p_check.add_argument("--trace", nargs="?", const="-", default=None, metavar="FILE",
                         help="write the per-conjunct rule trace (to stdout with no FILE)")
    p_check.add_argument("--include-crud", action="store_true",
                         help="include synthesized CRUD operations")
    p_check.set_defaults(fn=cmd_check)

    p_metrics = sub.add_parser("metrics", help="model complexity and executability report")
    common(p_metrics)
    p_metrics.add_argument("--format", choices=["text", "structured"], default="text")
    p_metrics.add_argument("--include-crud", action="store_true")
    p_metrics.set_defaults(fn=cmd_metrics)

    p_run = sub.add_parser("run", help="interactive execution (REPL)")
    common(p_run)
    p_run.add_argument("--checkpoint", metavar="FILE", help="load this checkpoint first")
    p_run.set_defaults(fn=cmd_run)

    p_serve = sub.add_parser("serve", help="start the HTTP service and UI")
    common(p_serve)
    p_serve.add_argument("--port", type=int, default=DEFAULT_PORT)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--ui", metavar="DIR", help="static UI directory (default frontend/dist)")
    p_serve.set_defaults(fn=cmd_serve)

    p_bench = sub.add_parser("bench", help="parse+compile wall time per model")
    common(p_bench)
    p_bench.set_defaults(fn=cmd_bench)

    args = parser.parse_args(argv)
    try:
        return args.fn(args, sys.stdout)
    except SystemExit as err:
        if isinstance(err.code, str):
            print(err.code, file=sys.stderr)
            return EXIT_ENV_ERROR
        raise


if __name__ == "__main__":
    sys.exit(main())
