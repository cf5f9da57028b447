// Wire types mirrored from the service API (see docs/report-schema.md).

export type TypedValue =
  | null
  | { type: "Integer"; value: number }
  | { type: "Real"; value: number }
  | { type: "Boolean"; value: boolean }
  | { type: "String"; value: string }
  | { type: "Ref"; value: number }
  | { type: "RefSet"; value: number[] };

export interface ParamSpec {
  name: string;
  type: string;
}

export interface OperationSpec {
  name: string;
  params: ParamSpec[];
  returnType: string | null;
  executable: boolean;
  hooks: string[];
}

export interface UseCaseSpec {
  name: string;
  primaryActor: string;
  synthesized: boolean;
  operations: OperationSpec[];
}

export interface ClassSpec {
  name: string;
  superClass: string | null;
  crud: boolean;
  attributes: ParamSpec[];
  roles: { name: string; target: string; multiplicity: string }[];
}

export interface ModelSummary {
  actors: string[];
  useCases: UseCaseSpec[];
  classes: ClassSpec[];
  invariants: string[];
}

export interface InvariantStatus {
  name: string;
  holds: boolean;
  witnesses: number[];
  note?: string;
}

export type Outcome =
  | { kind: "ok"; value: TypedValue; invariants: InvariantStatus[] }
  | { kind: "precondition_violated"; guard: string }
  | { kind: "hook_unbound"; hook: string }
  | { kind: "fault"; message: string };

export interface AttributeRow {
  id: number;
  attrs: Record<string, TypedValue>;
}

export interface LinkRow {
  sourceId: number;
  role: string;
  targetIds: number[];
  multiplicity: string;
}

export interface StateView {
  objectCounts: Record<string, number>;
  attributeTable: Record<string, AttributeRow[]>;
  linkTable: LinkRow[];
}
