"""Model-complexity and executability statistics.

Counts are taken over declared model elements; associations are counted as
directed ends. Synthesized CRUD operations are excluded unless requested, so
a model's headline numbers describe what its author wrote.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .decomposer import (
    CompiledModel, CompiledOperation, ExecutabilityReport, ForEach,
    analyze_executability,
)


@dataclass(frozen=True)
class ComplexityMetrics:
    actors: int
    use_cases: int
    system_operations: int
    entity_classes: int
    associations: int
    invariants: int
    plan_instructions: int


def _plan_size(op: CompiledOperation) -> int:
    n = len(op.definition_plan)
    for ins in op.post_plan:
        n += 1
        if isinstance(ins, ForEach):
            n += len(ins.body)
    return n


def _counted_ops(compiled: CompiledModel, include_crud: bool) -> list[CompiledOperation]:
    return [op for op in compiled.in_order() if include_crud or not op.synthesized]


def complexity_metrics(compiled: CompiledModel, include_crud: bool = False) -> ComplexityMetrics:
    model = compiled.resolved.model
    ops = _counted_ops(compiled, include_crud)
    counted_ucs = {op.use_case for op in ops}
    use_cases = [u for u in model.use_cases
                 if include_crud or u.name in counted_ucs or not any(
                     c.synthesized for c in model.contracts if c.use_case == u.name)]
    return ComplexityMetrics(
        actors=len(model.actors),
        use_cases=len(use_cases),
        system_operations=len(ops),
        entity_classes=len(model.classes),
        associations=len(model.associations),
        invariants=len(model.invariants),
        plan_instructions=sum(_plan_size(op) for op in ops),
    )


def executability(compiled: CompiledModel, include_crud: bool = False) -> ExecutabilityReport:
    report = analyze_executability(compiled)
    if include_crud:
        return report
    ops = tuple(s for s in report.operations
                if not compiled.operations[(s.use_case, s.operation)].synthesized)
    return ExecutabilityReport(ops, len(ops), sum(1 for s in ops if s.status == "executable"))


def report(compiled: CompiledModel, fmt: str = "text", include_crud: bool = False) -> str:
    if fmt not in ("text", "structured"):
        raise ValueError(f"unknown report format {fmt!r} (use text or structured)")
    metrics = complexity_metrics(compiled, include_crud)
    execr = executability(compiled, include_crud)
    if fmt == "structured":
        doc = {
            "complexity": {
                "actors": metrics.actors,
                "useCases": metrics.use_cases,
                "systemOperations": metrics.system_operations,
                "entityClasses": metrics.entity_classes,
                "associations": metrics.associations,
                "invariants": metrics.invariants,
                "planInstructions": metrics.plan_instructions,
            },
            "executability": {
                "total": execr.total,
                "executable": execr.executable,
                "successRate": round(execr.success_rate, 2),
                "operations": [
                    {"useCase": s.use_case, "operation": s.operation,
                     "status": s.status, "hooks": list(s.hooks)}
                    for s in execr.operations
                ],
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    lines = [
        "complexity:",
        f"  actors             {metrics.actors}",
        f"  use cases          {metrics.use_cases}",
        f"  system operations  {metrics.system_operations}",
        f"  entity classes     {metrics.entity_classes}",
        f"  associations       {metrics.associations}",
        f"  invariants         {metrics.invariants}",
        f"  plan instructions  {metrics.plan_instructions}",
        "executability:",
        f"  {execr.executable}/{execr.total} executable ({execr.success_rate:.1f}%)",
    ]
    for s in execr.operations:
        if s.status != "executable":
            lines.append(f"  {s.use_case}::{s.operation} partially executable "
                         f"(hooks: {', '.join(s.hooks)})")
    return "\n".join(lines) + "\n"


def parse_structured_report(text: str) -> ComplexityMetrics:
    doc = json.loads(text)
    c = doc["complexity"]
    return ComplexityMetrics(
        actors=c["actors"], use_cases=c["useCases"],
        system_operations=c["systemOperations"], entity_classes=c["entityClasses"],
        associations=c["associations"], invariants=c["invariants"],
        plan_instructions=c["planInstructions"],
    )
