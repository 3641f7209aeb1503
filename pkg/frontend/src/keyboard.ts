/**
 * Keyboard shortcuts: digits set the focused dimension's level (0-5 covers
 * every ordinal/binary scale), arrows move between dimensions, Enter
 * submits. Keystrokes inside text inputs are left alone.
 */

import { FieldModel } from "./scheme.js";

export type KeyAction =
  | { kind: "set"; dimension: string; value: number }
  | { kind: "next_field" }
  | { kind: "prev_field" }
  | { kind: "submit" }
  | { kind: "none" };

export interface KeyStroke {
  key: string;
  targetTag?: string; // lowercase tag name of the event target
}

export function mapKey(stroke: KeyStroke, fields: FieldModel[],
                       focusIndex: number): KeyAction {
  if (stroke.targetTag === "input" || stroke.targetTag === "textarea") {
    return { kind: "none" };
  }
  if (stroke.key === "Enter") {
    return { kind: "submit" };
  }
  if (stroke.key === "ArrowDown" || stroke.key === "j") {
    return { kind: "next_field" };
  }
  if (stroke.key === "ArrowUp" || stroke.key === "k") {
    return { kind: "prev_field" };
  }
  if (/^[0-9]$/.test(stroke.key)) {
    const field = fields[focusIndex];
    if (!field || field.kind === "count") {
      return { kind: "none" }; // counts use the stepper, not single digits
    }
    const value = Number(stroke.key);
    if (value < field.min || (field.max !== null && value > field.max)) {
      return { kind: "none" };
    }
    return { kind: "set", dimension: field.id, value };
  }
  return { kind: "none" };
}

export function nextFocus(fields: FieldModel[], focusIndex: number,
                          delta: 1 | -1): number {
  if (!fields.length) return 0;
  return (focusIndex + delta + fields.length) % fields.length;
}
