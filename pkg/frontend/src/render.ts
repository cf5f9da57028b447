// Pure renderers: service responses in, HTML strings out. Keeping these
// DOM-free makes them testable in node and keeps every displayed value
// traceable to a single response field.

import type {
  InvariantStatus, ModelSummary, Outcome, StateView, UseCaseSpec,
} from "./types.js";
import { formFields, showValue } from "./forms.js";
import type { OperationSpec } from "./types.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderOperationList(model: ModelSummary, selected?: { useCase: string; op: string }): string {
  if (model.useCases.length === 0) {
    return `<p class="empty">The loaded model declares no use cases.</p>`;
  }
  return model.useCases.map((uc) => renderGroup(uc, selected)).join("\n");
}

function renderGroup(uc: UseCaseSpec, selected?: { useCase: string; op: string }): string {
  const ops = uc.operations
    .map((op) => {
      const active = selected && selected.useCase === uc.name && selected.op === op.name;
      const flag = op.executable ? "" : ` <span class="partial" title="${esc(op.hooks.join(", "))}">needs hooks</span>`;
      return `<li><button class="op${active ? " active" : ""}" data-usecase="${esc(uc.name)}" data-op="${esc(op.name)}">${esc(op.name)}</button>${flag}</li>`;
    })
    .join("");
  const tag = uc.synthesized ? ` <span class="crud-tag">crud</span>` : "";
  return `<section class="usecase-group" data-usecase="${esc(uc.name)}">
<h3>${esc(uc.name)}${tag} <span class="actor">actor ${esc(uc.primaryActor)}</span></h3>
<ul>${ops}</ul>
</section>`;
}

export function renderOperationForm(useCase: string, op: OperationSpec): string {
  const fields = formFields(op)
    .map((f) => {
      const input =
        f.widget === "boolean"
          ? `<select name="${esc(f.name)}" data-widget="boolean"><option value="false">false</option><option value="true">true</option></select>`
          : `<input name="${esc(f.name)}" data-widget="${f.widget}" placeholder="${f.type}">`;
      return `<label class="field">${esc(f.name)}: ${f.type} ${input}</label>`;
    })
    .join("\n");
  const ret = op.returnType ? ` : ${esc(op.returnType)}` : "";
  return `<form id="op-form" data-usecase="${esc(useCase)}" data-op="${esc(op.name)}">
<h3>${esc(useCase)}::${esc(op.name)}${ret}</h3>
${fields}
<button type="submit" id="execute">execute</button>
<div id="op-result" class="result"></div>
</form>`;
}

export function renderOutcome(outcome: Outcome): string {
  switch (outcome.kind) {
    case "ok":
      return `<span class="ok">ok</span> ${esc(showValue(outcome.value))}`;
    case "hook_unbound":
      return `<span class="warn">hook unbound:</span> ${esc(outcome.hook)}`;
    case "fault":
      return `<span class="bad">fault:</span> ${esc(outcome.message)}`;
    case "precondition_violated":
      return `<span class="warn">precondition violated</span>`;
  }
}

/** The warning dialog shown when a guard refuses an invocation; the text is
 * exactly the guard the service reported. */
export function renderGuardModal(guard: string): string {
  return `<div class="modal-backdrop"><div class="modal warning" role="alertdialog">
<h3>Precondition not satisfied</h3>
<p class="guard-text">${esc(guard)}</p>
<button id="modal-close">close</button>
</div></div>`;
}

export function renderInvariantBars(invariants: InvariantStatus[]): string {
  if (invariants.length === 0) {
    return `<p class="empty">no invariants declared</p>`;
  }
  return invariants
    .map((inv) => {
      const cls = inv.holds ? "green" : "red";
      const witnesses = inv.witnesses.length
        ? ` <span class="witnesses">${inv.witnesses.map((w) => `#${w}`).join(", ")}</span>`
        : "";
      return `<div class="inv-bar ${cls}" data-inv="${esc(inv.name)}">${esc(inv.name)}${witnesses}</div>`;
    })
    .join("\n");
}

export function renderObjectCounts(state: StateView, selected?: string): string {
  const rows = Object.entries(state.objectCounts)
    .map(([cls, n]) => {
      const active = cls === selected ? " class=\"active\"" : "";
      return `<tr${active}><td><button class="class-pick" data-class="${esc(cls)}">${esc(cls)}</button></td><td>${n}</td></tr>`;
    })
    .join("");
  return `<table class="counts"><thead><tr><th>class</th><th>objects</th></tr></thead><tbody>${rows}</tbody></table>`;
}

export function renderAttributeTable(state: StateView, cls: string): string {
  const rows = state.attributeTable[cls] ?? [];
  if (rows.length === 0) {
    return `<p class="empty">no ${esc(cls)} objects</p>`;
  }
  const attrNames = Object.keys(rows[0].attrs);
  const head = ["id", ...attrNames].map((h) => `<th>${esc(h)}</th>`).join("");
  const body = rows
    .map((r) => {
      const cells = attrNames.map((a) => `<td>${esc(showValue(r.attrs[a]))}</td>`).join("");
      return `<tr><td>#${r.id}</td>${cells}</tr>`;
    })
    .join("");
  return `<table class="attrs"><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

export function renderLinkTable(state: StateView): string {
  if (state.linkTable.length === 0) {
    return `<p class="empty">no links formed</p>`;
  }
  const body = state.linkTable
    .map(
      (l) =>
        `<tr><td>#${l.sourceId}</td><td>${esc(l.role)}</td><td>${l.targetIds
          .map((t) => `#${t}`)
          .join(", ")}</td><td>${l.targetIds.length}</td><td>${esc(l.multiplicity)}</td></tr>`,
    )
    .join("");
  return `<table class="links"><thead><tr><th>source</th><th>association</th><th>targets</th><th>n</th><th>multiplicity</th></tr></thead><tbody>${body}</tbody></table>`;
}
