// Thin client for the service endpoints; every view value the UI shows
// comes from one of these responses.

import type { ModelSummary, Outcome, StateView, InvariantStatus, TypedValue } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, init);
  const text = await resp.text();
  let body: unknown = null;
  try {
    body = text ? JSON.parse(text) : null;
  } catch {
    body = null;
  }
  if (!resp.ok) {
    const msg = (body as { error?: string } | null)?.error ?? `HTTP ${resp.status}`;
    throw new ApiError(resp.status, msg);
  }
  return body as T;
}

export class ServiceClient {
  constructor(private base: string = "") {}

  model(): Promise<ModelSummary> {
    return request(this.base, "/model");
  }

  async createSession(useCase: string): Promise<string> {
    const body = await request<{ sessionId: string }>(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify({ useCase }),
    });
    return body.sessionId;
  }

  invoke(sessionId: string, operation: string, args: TypedValue[]): Promise<Outcome> {
    return request(this.base, "/invoke", {
      method: "POST",
      body: JSON.stringify({ sessionId, operation, args }),
    });
  }

  state(): Promise<StateView> {
    return request(this.base, "/state");
  }

  async invariants(): Promise<InvariantStatus[]> {
    const body = await request<{ invariants: InvariantStatus[] }>(this.base, "/invariants");
    return body.invariants;
  }

  async saveCheckpoint(): Promise<string> {
    const resp = await fetch(this.base + "/checkpoint/save", { method: "POST" });
    if (!resp.ok) throw new ApiError(resp.status, "checkpoint save failed");
    return resp.text();
  }

  async loadCheckpoint(doc: string): Promise<void> {
    const resp = await fetch(this.base + "/checkpoint/load", { method: "POST", body: doc });
    if (!resp.ok) {
      const body = await resp.json().catch(() => ({}));
      throw new ApiError(resp.status, (body as { error?: string }).error ?? "load failed");
    }
  }
}
