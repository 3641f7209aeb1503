import { describe, expect, it } from "vitest";

import { mapKey, nextFocus } from "../src/keyboard.js";
import { buildFormModel, UiSchemeModel } from "../src/scheme.js";

const SCHEME: UiSchemeModel = {
  version: "v1",
  dimensions: [
    { id: "political_symbols", kind: "count", min: 0, max: null, label: "",
      level_descriptions: {} },
    { id: "flag_appearance", kind: "ordinal", min: 0, max: 4, label: "",
      level_descriptions: {} },
    { id: "modernity", kind: "ordinal", min: 1, max: 5, label: "",
      level_descriptions: {} },
    { id: "sovereignty", kind: "binary", min: 0, max: 1, label: "",
      level_descriptions: {} },
  ],
};
const FIELDS = buildFormModel(SCHEME);

describe("digit shortcuts", () => {
  it("sets the focused ordinal field within its bounds", () => {
    expect(mapKey({ key: "3" }, FIELDS, 1)).toEqual(
      { kind: "set", dimension: "flag_appearance", value: 3 });
    expect(mapKey({ key: "0" }, FIELDS, 1)).toEqual(
      { kind: "set", dimension: "flag_appearance", value: 0 });
    expect(mapKey({ key: "5" }, FIELDS, 2)).toEqual(
      { kind: "set", dimension: "modernity", value: 5 });
  });

  it("ignores digits outside the scale", () => {
    expect(mapKey({ key: "5" }, FIELDS, 1)).toEqual({ kind: "none" }); // flag max 4
    expect(mapKey({ key: "0" }, FIELDS, 2)).toEqual({ kind: "none" }); // modernity min 1
    expect(mapKey({ key: "2" }, FIELDS, 3)).toEqual({ kind: "none" }); // binary max 1
  });

  it("never drives count fields from single digits", () => {
    expect(mapKey({ key: "3" }, FIELDS, 0)).toEqual({ kind: "none" });
  });

  it("leaves keystrokes inside text inputs alone", () => {
    expect(mapKey({ key: "3", targetTag: "input" }, FIELDS, 1)).toEqual({ kind: "none" });
    expect(mapKey({ key: "Enter", targetTag: "textarea" }, FIELDS, 1))
      .toEqual({ kind: "none" });
  });
});

describe("navigation", () => {
  it("arrows and j/k walk the fields, wrapping", () => {
    expect(mapKey({ key: "ArrowDown" }, FIELDS, 0)).toEqual({ kind: "next_field" });
    expect(mapKey({ key: "k" }, FIELDS, 0)).toEqual({ kind: "prev_field" });
    expect(nextFocus(FIELDS, 3, 1)).toBe(0);
    expect(nextFocus(FIELDS, 0, -1)).toBe(3);
  });

  it("enter submits", () => {
    expect(mapKey({ key: "Enter" }, FIELDS, 0)).toEqual({ kind: "submit" });
  });
});
