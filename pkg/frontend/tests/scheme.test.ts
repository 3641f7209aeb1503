import { describe, expect, it } from "vitest";

import {
  buildFormModel, sanitizeQueueEntry, validateCodes, UiSchemeModel,
} from "../src/scheme.js";

const SCHEME: UiSchemeModel = {
  version: "v1",
  dimensions: [
    { id: "political_symbols", kind: "count", min: 0, max: null,
      label: "Political symbols", level_descriptions: { rule: "Count each instance." } },
    { id: "flag_appearance", kind: "ordinal", min: 0, max: 4,
      label: "Flag appearance",
      level_descriptions: { "0": "No flag", "4": "Flag as central focus" } },
    { id: "sovereignty", kind: "binary", min: 0, max: 1,
      label: "Sovereignty", level_descriptions: { "0": "absent", "1": "present" } },
    { id: "modernity", kind: "ordinal", min: 1, max: 5,
      label: "Modernity", level_descriptions: { "1": "Fully traditional", "5": "Fully modern" } },
  ],
};

describe("form model", () => {
  it("derives one field per dimension with levels from the scheme", () => {
    const fields = buildFormModel(SCHEME);
    expect(fields.map((f) => f.id)).toEqual([
      "political_symbols", "flag_appearance", "sovereignty", "modernity",
    ]);
    const flag = fields[1]!;
    expect(flag.levels.map((l) => l.value)).toEqual([0, 1, 2, 3, 4]);
    expect(flag.levels[4]!.description).toBe("Flag as central focus");
    const modernity = fields[3]!;
    expect(modernity.levels.map((l) => l.value)).toEqual([1, 2, 3, 4, 5]);
  });

  it("count fields carry the counting-rule tooltip and no levels", () => {
    const count = buildFormModel(SCHEME)[0]!;
    expect(count.levels).toEqual([]);
    expect(count.helpText).toContain("Count each instance");
  });

  it("changing a server-side bound changes the form without a rebuild", () => {
    const widened = structuredClone(SCHEME);
    widened.dimensions[1]!.max = 6;
    const fields = buildFormModel(widened);
    expect(fields[1]!.levels.map((l) => l.value)).toEqual([0, 1, 2, 3, 4, 5, 6]);
  });
});

describe("validation mirrors server bounds", () => {
  const good = { political_symbols: 3, flag_appearance: 2, sovereignty: 1, modernity: 4 };

  it("accepts in-range codes", () => {
    expect(validateCodes(SCHEME, good)).toEqual([]);
  });

  it("flags out-of-range and missing dimensions by id", () => {
    expect(validateCodes(SCHEME, { ...good, flag_appearance: 7 }))
      .toEqual(["flag_appearance"]);
    expect(validateCodes(SCHEME, { ...good, modernity: undefined as unknown as number }))
      .toEqual(["modernity"]);
    expect(validateCodes(SCHEME, { ...good, political_symbols: -1 }))
      .toEqual(["political_symbols"]);
  });

  it("rejects non-integers", () => {
    expect(validateCodes(SCHEME, { ...good, modernity: 3.5 })).toEqual(["modernity"]);
  });

  it("derives from the fetched scheme: a widened bound accepts new values", () => {
    const widened = structuredClone(SCHEME);
    widened.dimensions[1]!.max = 7;
    expect(validateCodes(widened, { ...good, flag_appearance: 7 })).toEqual([]);
  });
});

describe("blinding sanitizer", () => {
  it("passes through only the whitelisted fields", () => {
    const entry = sanitizeQueueEntry({
      cell_id: "china--women--midjourney",
      priority: "high",
      position: 0,
      image_url: "/api/images/china--women--midjourney",
      // a misbehaving server leaking quality internals or ensemble codes:
      h_ext: 0.93,
      political_symbols: 4,
      consensus: { modernity: 2 },
      other_coder: "bob",
    });
    expect(Object.keys(entry).sort()).toEqual(
      ["cell_id", "image_url", "position", "priority"]);
    expect((entry as Record<string, unknown>).h_ext).toBeUndefined();
    expect((entry as Record<string, unknown>).political_symbols).toBeUndefined();
  });

  it("rejects entries without the required fields", () => {
    expect(() => sanitizeQueueEntry({ priority: "high" })).toThrow();
  });
});
