// DOM glue: selection state, the execute flow, and panel refresh. One
// invocation in flight at a time; every panel redraw pulls fresh service
// responses rather than computing anything locally.

import { ServiceClient, ApiError } from "./api.js";
import { encodeArgs, formFields } from "./forms.js";
import type { ModelSummary, OperationSpec } from "./types.js";
import {
  renderAttributeTable, renderGuardModal, renderInvariantBars, renderLinkTable,
  renderObjectCounts, renderOperationForm, renderOperationList, renderOutcome,
} from "./render.js";

const client = new ServiceClient("");

interface UiState {
  model: ModelSummary | null;
  selected: { useCase: string; op: string } | null;
  selectedClass: string | null;
  sessions: Map<string, string>;
  busy: boolean;
}

const ui: UiState = {
  model: null,
  selected: null,
  selectedClass: null,
  sessions: new Map(),
  busy: false,
};

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function currentOp(): OperationSpec | null {
  if (!ui.model || !ui.selected) return null;
  const uc = ui.model.useCases.find((u) => u.name === ui.selected!.useCase);
  return uc?.operations.find((o) => o.name === ui.selected!.op) ?? null;
}

async function sessionFor(useCase: string): Promise<string> {
  const existing = ui.sessions.get(useCase);
  if (existing) return existing;
  const sid = await client.createSession(useCase);
  ui.sessions.set(useCase, sid);
  return sid;
}

function drawOperations(): void {
  if (!ui.model) return;
  el("operations").innerHTML = renderOperationList(ui.model, ui.selected ?? undefined);
  for (const btn of el("operations").querySelectorAll<HTMLButtonElement>("button.op")) {
    btn.addEventListener("click", () => {
      ui.selected = { useCase: btn.dataset.usecase!, op: btn.dataset.op! };
      drawOperations();
      drawForm();
    });
  }
}

function drawForm(): void {
  const op = currentOp();
  if (!op || !ui.selected) {
    el("form-panel").innerHTML = `<p class="empty">select an operation</p>`;
    return;
  }
  el("form-panel").innerHTML = renderOperationForm(ui.selected.useCase, op);
  const form = el("op-form") as unknown as HTMLFormElement;
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void execute(form, op);
  });
}

async function execute(form: HTMLFormElement, op: OperationSpec): Promise<void> {
  if (ui.busy || !ui.selected) return;
  const resultBox = el("op-result");
  const raw: Record<string, string | boolean> = {};
  for (const field of form.querySelectorAll<HTMLInputElement | HTMLSelectElement>("[name]")) {
    raw[field.name] = field.value;
  }
  let args;
  try {
    args = encodeArgs(formFields(op), raw);
  } catch (err) {
    resultBox.innerHTML = `<span class="bad">${(err as Error).message}</span>`;
    return;
  }
  ui.busy = true;
  const button = el("execute") as HTMLButtonElement;
  button.disabled = true;
  try {
    const sid = await sessionFor(ui.selected.useCase);
    const outcome = await client.invoke(sid, op.name, args);
    resultBox.innerHTML = renderOutcome(outcome);
    if (outcome.kind === "precondition_violated") {
      showModal(outcome.guard);
    }
    await refreshPanels();
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      // the session expired (e.g. a checkpoint load); retry once with a fresh one
      ui.sessions.delete(ui.selected.useCase);
    }
    resultBox.innerHTML = `<span class="bad">request failed: ${(err as Error).message}</span>`;
  } finally {
    ui.busy = false;
    button.disabled = false;
  }
}

function showModal(guard: string): void {
  const host = el("modal-host");
  host.innerHTML = renderGuardModal(guard);
  el("modal-close").addEventListener("click", () => {
    host.innerHTML = "";
  });
}

async function refreshPanels(): Promise<void> {
  const [state, invariants] = await Promise.all([client.state(), client.invariants()]);
  if (!ui.selectedClass || !(ui.selectedClass in state.objectCounts)) {
    ui.selectedClass = Object.keys(state.objectCounts)[0] ?? null;
  }
  el("counts").innerHTML = renderObjectCounts(state, ui.selectedClass ?? undefined);
  el("attributes").innerHTML = ui.selectedClass
    ? renderAttributeTable(state, ui.selectedClass)
    : "";
  el("links").innerHTML = renderLinkTable(state);
  el("invariants").innerHTML = renderInvariantBars(invariants);
  for (const btn of el("counts").querySelectorAll<HTMLButtonElement>("button.class-pick")) {
    btn.addEventListener("click", () => {
      ui.selectedClass = btn.dataset.class!;
      void refreshPanels();
    });
  }
}

function wireCheckpointButtons(): void {
  el("save-state").addEventListener("click", () => {
    void (async () => {
      const doc = await client.saveCheckpoint();
      const blob = new Blob([doc], { type: "application/json" });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = "state.ckpt";
      link.click();
      URL.revokeObjectURL(link.href);
    })();
  });
  const fileInput = el("load-file") as HTMLInputElement;
  el("load-state").addEventListener("click", () => fileInput.click());
  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    void (async () => {
      try {
        await client.loadCheckpoint(await file.text());
        ui.sessions.clear(); // the service expired them
        await refreshPanels();
        el("toast").textContent = "state loaded";
      } catch (err) {
        el("toast").textContent = `load failed: ${(err as Error).message}`;
      }
      fileInput.value = "";
    })();
  });
}

async function boot(): Promise<void> {
  try {
    ui.model = await client.model();
  } catch (err) {
    el("operations").innerHTML = `<p class="bad">service unavailable: ${(err as Error).message}</p>`;
    return;
  }
  drawOperations();
  drawForm();
  wireCheckpointButtons();
  await refreshPanels();
}

if (typeof document !== "undefined" && document.getElementById("operations")) {
  void boot();
}
