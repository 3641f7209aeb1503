/**
 * Coding-session state machine: walk the queue, collect codes, submit,
 * advance. Pure logic; the DOM layer renders whatever this exposes.
 */

import { ApiError, ValidationApi } from "./api.js";
import { Codes, QueueEntry, UiSchemeModel, validateCodes } from "./scheme.js";

export type SessionPhase = "loading" | "coding" | "done" | "error";

export interface SessionState {
  phase: SessionPhase;
  queue: QueueEntry[];
  index: number;
  draft: Partial<Codes>;
  fieldErrors: string[];
  banner: string;
}

export class CodingSession {
  state: SessionState = {
    phase: "loading", queue: [], index: 0, draft: {}, fieldErrors: [], banner: "",
  };

  constructor(private api: ValidationApi, private scheme: UiSchemeModel,
              private coderId: string) {}

  current(): QueueEntry | null {
    return this.state.queue[this.state.index] ?? null;
  }

  remaining(): number {
    return Math.max(0, this.state.queue.length - this.state.index);
  }

  async load(): Promise<void> {
    try {
      const queue = await this.api.getQueue(this.coderId);
      this.state = {
        ...this.state,
        phase: queue.length ? "coding" : "done",
        queue,
        index: 0,
        draft: {},
        fieldErrors: [],
        banner: "",
      };
    } catch (err) {
      this.state = { ...this.state, phase: "error", banner: describe(err) };
    }
  }

  setCode(dimension: string, value: number): void {
    this.state.draft = { ...this.state.draft, [dimension]: value };
    this.state.fieldErrors = this.state.fieldErrors.filter((d) => d !== dimension);
  }

  /** Client-side validation mirrors the server bounds exactly. */
  validateDraft(): string[] {
    return validateCodes(this.scheme, this.state.draft);
  }

  async submit(note = ""): Promise<boolean> {
    const bad = this.validateDraft();
    if (bad.length) {
      this.state.fieldErrors = bad;
      return false;
    }
    const entry = this.current();
    if (!entry) return false;
    try {
      await this.api.submitCodes(entry.cell_id, this.coderId,
                                 this.state.draft as Codes, note);
    } catch (err) {
      if (err instanceof ApiError && err.outOfRange.length) {
        // server rejected specific dimensions: surface them, keep the draft
        this.state.fieldErrors = err.outOfRange;
        return false;
      }
      this.state.banner = describe(err);
      return false;
    }
    this.state.index += 1;
    this.state.draft = {};
    this.state.fieldErrors = [];
    if (this.state.index >= this.state.queue.length) {
      this.state.phase = "done";
    }
    return true;
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError && err.status === 0) {
    return "Cannot reach the validation service. Check the server and retry.";
  }
  return err instanceof Error ? err.message : String(err);
}
