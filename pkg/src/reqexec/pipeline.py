"""End-to-end build: parse -> synthesize CRUD -> resolve -> compile."""

from __future__ import annotations

from pathlib import Path

from .crud import synthesize_crud
from .decomposer import CompileError, CompiledModel, compile_model
from .parser import ParseResult, SourceFile, parse_model
from .resolver import ModelError, resolve_model


class BuildError(Exception):
    """Any failure between source text and a compiled model, with one
    rendered message per diagnostic."""

    def __init__(self, messages: list[str]):
        super().__init__("\n".join(messages))
        self.messages = messages


def build_from_sources(sources: list[SourceFile], include_crud: bool = True) -> CompiledModel:
    result: ParseResult = parse_model(sources)
    if not result.ok:
        raise BuildError([str(d) for d in result.diagnostics])
    model = result.model
    if include_crud:
        model = synthesize_crud(model)
    try:
        resolved = resolve_model(model)
    except ModelError as err:
        raise BuildError([str(i) for i in err.issues]) from None
    try:
        return compile_model(resolved)
    except CompileError as err:
        raise BuildError([str(err)]) from None


def build_from_paths(paths: list[str | Path], include_crud: bool = True) -> CompiledModel:
    sources = []
    for p in paths:
        path = Path(p)
        try:
            sources.append(SourceFile(str(path), path.read_text(encoding="utf-8")))
        except OSError as err:
            raise BuildError([f"cannot read {path}: {err}"]) from None
    return build_from_sources(sources, include_crud)
