/**
 * Thin typed client for the validation backend. Every request carries the
 * shared study token; queue payloads pass through the blinding sanitizer
 * before anything else sees them.
 */

import { Codes, QueueEntry, UiSchemeModel, sanitizeQueueEntry } from "./scheme.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, public status: number,
              public outOfRange: string[] = []) {
    super(message);
  }
}

export interface ProgressView {
  per_coder: Record<string, { completed: number; remaining: number }>;
  overall: { pending: number; partially_coded: number; complete: number; total: number };
}

export class ValidationApi {
  constructor(private token: string, private fetchImpl: FetchLike = fetch,
              private base: string = "") {}

  private async request(path: string, init: RequestInit = {}): Promise<unknown> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(this.base + path, {
        ...init,
        headers: {
          "Content-Type": "application/json",
          "X-Study-Token": this.token,
          ...(init.headers ?? {}),
        },
      });
    } catch (err) {
      throw new ApiError(`backend unreachable: ${String(err)}`, 0);
    }
    if (!resp.ok) {
      let detail: unknown = resp.statusText;
      let outOfRange: string[] = [];
      try {
        const body = (await resp.json()) as { detail?: unknown };
        detail = body.detail ?? detail;
        const d = body.detail as { out_of_range_dimensions?: string[] } | undefined;
        if (d && Array.isArray(d.out_of_range_dimensions)) {
          outOfRange = d.out_of_range_dimensions;
        }
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(typeof detail === "string" ? detail : JSON.stringify(detail),
                         resp.status, outOfRange);
    }
    return resp.json();
  }

  async registerSession(coderId: string, displayName = ""): Promise<void> {
    await this.request("/api/session", {
      method: "POST",
      body: JSON.stringify({ coder_id: coderId, display_name: displayName }),
    });
  }

  async getScheme(): Promise<UiSchemeModel> {
    return (await this.request("/api/scheme")) as UiSchemeModel;
  }

  async getQueue(coderId: string): Promise<QueueEntry[]> {
    const raw = (await this.request(
      `/api/queue?coder=${encodeURIComponent(coderId)}`)) as Record<string, unknown>[];
    return raw.map(sanitizeQueueEntry);
  }

  async submitCodes(cellId: string, coderId: string, codes: Codes,
                    note = ""): Promise<void> {
    await this.request("/api/codes", {
      method: "POST",
      body: JSON.stringify({ cell_id: cellId, coder_id: coderId, note, ...codes }),
    });
  }

  async getProgress(): Promise<ProgressView> {
    return (await this.request("/api/progress")) as ProgressView;
  }

  /** Image bytes need the token header too, so <img src> is not enough. */
  async fetchImageBlob(imageUrl: string): Promise<Blob> {
    const resp = await this.fetchImpl(this.base + imageUrl, {
      headers: { "X-Study-Token": this.token },
    });
    if (!resp.ok) {
      throw new ApiError(`image fetch failed (${resp.status})`, resp.status);
    }
    return resp.blob();
  }
}
