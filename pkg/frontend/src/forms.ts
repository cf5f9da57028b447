// Parameter forms are generated purely from operation signatures; nothing
// here knows any concrete model.

import type { OperationSpec, ParamSpec, TypedValue } from "./types.js";

export type WidgetKind = "integer" | "real" | "boolean" | "string";

export interface FieldSpec {
  name: string;
  type: string;
  widget: WidgetKind;
}

export function widgetFor(param: ParamSpec): WidgetKind {
  switch (param.type) {
    case "Integer":
      return "integer";
    case "Real":
      return "real";
    case "Boolean":
      return "boolean";
    default:
      return "string";
  }
}

export function formFields(op: OperationSpec): FieldSpec[] {
  return op.params.map((p) => ({ name: p.name, type: p.type, widget: widgetFor(p) }));
}

/** Turn one raw input into the wire encoding; throws with a field-specific
 * message so the form can show it inline. */
export function encodeField(field: FieldSpec, raw: string | boolean): TypedValue {
  if (field.widget === "boolean") {
    return { type: "Boolean", value: raw === true || raw === "true" };
  }
  const text = String(raw).trim();
  if (field.widget === "integer") {
    if (!/^-?\d+$/.test(text)) {
      throw new Error(`${field.name}: enter an integer`);
    }
    return { type: "Integer", value: Number(text) };
  }
  if (field.widget === "real") {
    if (text === "" || Number.isNaN(Number(text))) {
      throw new Error(`${field.name}: enter a number`);
    }
    return { type: "Real", value: Number(text) };
  }
  return { type: "String", value: String(raw) };
}

export function encodeArgs(fields: FieldSpec[], raw: Record<string, string | boolean>): TypedValue[] {
  return fields.map((f) => encodeField(f, raw[f.name] ?? ""));
}

export function showValue(v: TypedValue): string {
  if (v === null) return "undefined";
  switch (v.type) {
    case "Boolean":
      return v.value ? "true" : "false";
    case "String":
      return JSON.stringify(v.value);
    case "Ref":
      return `#${v.value}`;
    case "RefSet":
      return `{${v.value.map((i) => `#${i}`).join(", ")}}`;
    default:
      return String(v.value);
  }
}
