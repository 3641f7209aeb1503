/**
 * DOM layer: renders the queue, the scheme-driven coding form and the
 * progress strip out of the pure session state. Everything displayed is
 * derived from the sanitized queue entries and the fetched scheme; the
 * only quality signal a coder ever sees is the priority badge.
 */

import { ValidationApi } from "./api.js";
import { mapKey, nextFocus } from "./keyboard.js";
import { CodingSession } from "./session.js";
import { FieldModel, buildFormModel, UiSchemeModel } from "./scheme.js";

export class App {
  private fields: FieldModel[];
  private focusIndex = 0;
  private imageUrlCache = new Map<string, string>();

  constructor(private root: HTMLElement, private api: ValidationApi,
              private scheme: UiSchemeModel, private session: CodingSession,
              private coderId: string) {
    this.fields = buildFormModel(scheme);
  }

  async start(): Promise<void> {
    this.render();
    await this.session.load();
    this.render();
    document.addEventListener("keydown", (event) => this.onKey(event));
  }

  private onKey(event: KeyboardEvent): void {
    const tag = event.target instanceof HTMLElement
      ? event.target.tagName.toLowerCase() : undefined;
    const action = mapKey({ key: event.key, targetTag: tag },
                          this.fields, this.focusIndex);
    if (action.kind === "none") return;
    event.preventDefault();
    if (action.kind === "set") {
      this.session.setCode(action.dimension, action.value);
    } else if (action.kind === "next_field") {
      this.focusIndex = nextFocus(this.fields, this.focusIndex, 1);
    } else if (action.kind === "prev_field") {
      this.focusIndex = nextFocus(this.fields, this.focusIndex, -1);
    } else if (action.kind === "submit") {
      void this.submit();
      return;
    }
    this.render();
  }

  private async submit(): Promise<void> {
    const advanced = await this.session.submit(this.noteValue());
    this.focusIndex = 0;
    this.render();
    if (advanced) {
      const next = this.session.current();
      if (next) void this.loadImage(next.image_url);
    }
  }

  private noteValue(): string {
    const el = this.root.querySelector<HTMLTextAreaElement>("#note");
    return el ? el.value : "";
  }

  private async loadImage(imageUrl: string): Promise<void> {
    if (!this.imageUrlCache.has(imageUrl)) {
      const blob = await this.api.fetchImageBlob(imageUrl);
      this.imageUrlCache.set(imageUrl, URL.createObjectURL(blob));
    }
    const img = this.root.querySelector<HTMLImageElement>("#study-image");
    if (img) img.src = this.imageUrlCache.get(imageUrl) ?? "";
  }

  render(): void {
    const s = this.session.state;
    if (s.phase === "loading") {
      this.root.innerHTML = `<p class="status">Loading queue…</p>`;
      return;
    }
    if (s.phase === "error") {
      this.root.innerHTML = `
        <div class="banner error">${escapeHtml(s.banner)}
          <button id="retry">Retry</button></div>`;
      this.root.querySelector("#retry")?.addEventListener("click", async () => {
        await this.session.load();
        this.render();
      });
      return;
    }
    if (s.phase === "done") {
      this.root.innerHTML = `<div class="done"><h2>All done</h2>
        <p>Every queued image has your codes. Thank you.</p></div>`;
      return;
    }
    const entry = this.session.current();
    if (!entry) return;
    const position = s.index + 1;
    this.root.innerHTML = `
      <header>
        <span class="badge ${entry.priority}">${entry.priority}</span>
        <span class="progress">${position} / ${s.queue.length}</span>
        <span class="coder">coder: ${escapeHtml(this.coderId)}</span>
      </header>
      <main>
        <figure><img id="study-image" alt="image under validation"></figure>
        <form id="coding-form">${this.fields.map((f, i) => this.renderField(f, i)).join("")}
          <label class="note-label">note (optional)
            <textarea id="note" rows="2"></textarea></label>
          <button type="submit" id="submit">Submit &amp; next (Enter)</button>
          ${s.banner ? `<div class="banner error">${escapeHtml(s.banner)}</div>` : ""}
        </form>
      </main>`;
    this.root.querySelector("#coding-form")?.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submit();
    });
    this.root.querySelectorAll<HTMLInputElement>("[data-dimension]").forEach((el) => {
      el.addEventListener("change", () => {
        this.session.setCode(el.dataset.dimension ?? "", Number(el.value));
        this.render();
      });
    });
    void this.loadImage(entry.image_url);
  }

  private renderField(field: FieldModel, index: number): string {
    const s = this.session.state;
    const has_error = s.fieldErrors.includes(field.id);
    const focused = index === this.focusIndex;
    const value = s.draft[field.id];
    const classes = `field${has_error ? " invalid" : ""}${focused ? " focused" : ""}`;
    if (field.kind === "count") {
      return `<fieldset class="${classes}">
        <legend>${escapeHtml(field.label)}
          <span class="tooltip" title="${escapeHtml(field.helpText)}">?</span></legend>
        <input type="number" data-dimension="${field.id}" min="${field.min}"
               step="1" value="${value ?? ""}">
        ${has_error ? `<span class="field-error">enter a count &ge; ${field.min}</span>` : ""}
      </fieldset>`;
    }
    const options = field.levels.map((level) => `
      <label class="level">
        <input type="radio" name="${field.id}" data-dimension="${field.id}"
               value="${level.value}" ${value === level.value ? "checked" : ""}>
        <span class="level-value">${level.value}</span>
        <span class="level-text">${escapeHtml(level.description)}</span>
      </label>`).join("");
    return `<fieldset class="${classes}">
      <legend>${escapeHtml(field.label)}</legend>${options}
      ${has_error ? `<span class="field-error">select a level ${field.min}&ndash;${field.max}</span>` : ""}
    </fieldset>`;
  }
}

function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => ({
    "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;", "'": "&#39;",
  }[ch] as string));
}
