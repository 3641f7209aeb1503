/**
 * Coding-scheme model fetched from the backend, plus everything the form
 * derives from it. No dimension bounds are hardcoded anywhere in the UI:
 * changing a bound server-side changes the rendered form and the client
 * validation without a rebuild.
 */

export type DimensionKind = "count" | "ordinal" | "binary";

export interface DimensionSpec {
  id: string;
  kind: DimensionKind;
  min: number;
  max: number | null; // null = unbounded above (count dimensions)
  label: string;
  level_descriptions: Record<string, string>;
}

export interface UiSchemeModel {
  version: string;
  dimensions: DimensionSpec[];
}

export type Codes = Record<string, number>;

/** Queue entries may only carry these fields into the presentation layer.
 * Anything else (ensemble codes, entropy values, another coder's state) is
 * stripped before rendering, so blinding survives even a misbehaving
 * server. */
export const QUEUE_ENTRY_FIELDS = ["cell_id", "priority", "position", "image_url"] as const;

export interface QueueEntry {
  cell_id: string;
  priority: "high" | "medium" | "low";
  position: number;
  image_url: string;
}

export function sanitizeQueueEntry(raw: Record<string, unknown>): QueueEntry {
  const entry: Record<string, unknown> = {};
  for (const field of QUEUE_ENTRY_FIELDS) {
    entry[field] = raw[field];
  }
  if (typeof entry.cell_id !== "string" || typeof entry.image_url !== "string") {
    throw new Error("queue entry missing required fields");
  }
  return entry as unknown as QueueEntry;
}

export interface FieldModel {
  id: string;
  kind: DimensionKind;
  label: string;
  min: number;
  max: number | null;
  /** ordinal/binary levels in ascending order with their help text */
  levels: { value: number; description: string }[];
  helpText: string;
}

export function buildFormModel(scheme: UiSchemeModel): FieldModel[] {
  return scheme.dimensions.map((dim) => {
    const levels: { value: number; description: string }[] = [];
    if (dim.kind !== "count" && dim.max !== null) {
      for (let v = dim.min; v <= dim.max; v += 1) {
        levels.push({ value: v, description: dim.level_descriptions[String(v)] ?? "" });
      }
    }
    return {
      id: dim.id,
      kind: dim.kind,
      label: dim.label || dim.id,
      min: dim.min,
      max: dim.max,
      levels,
      helpText: dim.kind === "count" ? dim.level_descriptions["rule"] ?? "" : "",
    };
  });
}

/** Mirror of the server-side bound check; returns offending dimension ids. */
export function validateCodes(scheme: UiSchemeModel, codes: Partial<Codes>): string[] {
  const bad: string[] = [];
  for (const dim of scheme.dimensions) {
    const value = codes[dim.id];
    if (value === undefined || value === null || !Number.isInteger(value)) {
      bad.push(dim.id);
      continue;
    }
    if (value < dim.min || (dim.max !== null && value > dim.max)) {
      bad.push(dim.id);
    }
  }
  return bad;
}
