import { escapeHtml, layoutSpans, renderDocumentHtml } from "./highlight.js";
import type { ReviewSession } from "./session.js";
import { codePointLength, cpSlice, findOccurrences, type Occurrence } from "./text.js";
import type { Suggestion } from "./types.js";

const LANGUAGES = ["de", "fr", "it"];
const LABELS = ["PER", "LOC", "ORG", "MISC"];
const CONTEXT_CHARS = 24;

/** The review screen: configuration and suggestion list on the left,
 * the highlighted ruling on the right.
 *
 * All interaction runs through one delegated click listener keyed on
 * `data-action` attributes, and all state the server owns lives in the
 * session; this class only keeps view state (selection, search, which
 * pane is showing).
 */
export class ReviewApp {
  private activeId: string | null = null;
  private query = "";
  private hits: Occurrence[] = [];
  private view: "review" | "anonymized" = "review";
  private anonymized = "";
  private pendingOps = 0;
  private idleWaiters: Array<() => void> = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly session: ReviewSession,
  ) {
    this.root.innerHTML = this.skeleton();
    this.root.addEventListener("click", (event) => this.onClick(event));
    this.session.onChange(() => this.renderAll());
    this.renderAll();
  }

  /** Resolves once every action started so far has settled. */
  idle(): Promise<void> {
    if (this.pendingOps === 0) {
      return Promise.resolve();
    }
    return new Promise((resolve) => this.idleWaiters.push(resolve));
  }

  private track(work: Promise<unknown>): void {
    this.pendingOps += 1;
    void work.finally(() => {
      this.pendingOps -= 1;
      if (this.pendingOps === 0) {
        const waiters = this.idleWaiters;
        this.idleWaiters = [];
        for (const resolve of waiters) {
          resolve();
        }
      }
    });
  }

  private onClick(event: Event): void {
    const origin = event.target as Element | null;
    const actor =
      origin && typeof origin.closest === "function"
        ? (origin.closest("[data-action]") as HTMLElement | null)
        : null;
    if (!actor) {
      return;
    }
    const suggestionId = actor.dataset.suggestionId ?? null;
    switch (actor.dataset.action) {
      case "load":
        this.track(this.loadFromForm());
        break;
      case "open":
        this.track(this.openFromForm());
        break;
      case "detect":
        this.track(this.session.detect());
        break;
      case "propagate":
        this.track(this.session.propagate());
        break;
      case "accept":
        if (suggestionId) {
          this.track(this.session.accept(suggestionId, this.editedReplacement(suggestionId)));
        }
        break;
      case "reject":
        if (suggestionId) {
          this.track(this.session.reject(suggestionId));
        }
        break;
      case "select":
        this.activeId = this.activeId === suggestionId ? null : suggestionId;
        this.renderSuggestions();
        this.renderDocument();
        break;
      case "search":
        this.runSearch();
        break;
      case "clear-search":
        this.query = "";
        this.hits = [];
        this.input("#search-input").value = "";
        this.renderSearch();
        this.renderDocument();
        break;
      case "mark":
        this.track(this.markHit(Number(actor.dataset.hit)));
        break;
      case "mark-all":
        this.track(this.markAllHits());
        break;
      case "view-review":
        this.view = "review";
        this.renderDocument();
        break;
      case "view-anonymized":
        this.track(this.showAnonymized());
        break;
      case "download-txt":
        this.track(this.download("txt"));
        break;
      case "download-html":
        this.track(this.download("html"));
        break;
      case "reload":
        this.track(this.session.reload());
        break;
      case "dismiss-error":
        this.session.clearError();
        break;
      default:
        break;
    }
  }

  private async loadFromForm(): Promise<void> {
    const text = this.input("#ruling-text").value;
    const language = this.input("#ruling-language").value;
    const id = this.input("#ruling-id").value.trim();
    this.resetViewState();
    const ok = await this.session.load(text, language, id || undefined);
    if (ok) {
      await this.session.detect();
    }
  }

  private async openFromForm(): Promise<void> {
    const id = this.input("#open-id").value.trim();
    if (!id) {
      return;
    }
    this.resetViewState();
    const ok = await this.session.open(id);
    if (ok) {
      await this.session.detect();
    }
  }

  private resetViewState(): void {
    this.activeId = null;
    this.query = "";
    this.hits = [];
    this.view = "review";
    this.anonymized = "";
  }

  private runSearch(): void {
    const project = this.session.project;
    this.query = this.input("#search-input").value;
    this.hits = project ? findOccurrences(project.text, this.query) : [];
    this.activeId = null;
    this.renderSearch();
    this.renderDocument();
  }

  private async markHit(index: number): Promise<void> {
    const project = this.session.project;
    const hit = this.hits[index];
    if (!project || !hit) {
      return;
    }
    const label = this.input("#mark-label").value || "PER";
    const replacement = this.input("#mark-replacement").value.trim() || this.defaultReplacement();
    await this.session.markSpan(hit.start, hit.end, label, replacement);
    this.renderSearch();
  }

  /** Accept the searched surface everywhere: the marked occurrence is
   * propagated document-wide, then each copy is accepted. */
  private async markAllHits(): Promise<void> {
    if (!this.query) {
      return;
    }
    await this.session.markAll(this.query);
    this.renderSearch();
  }

  private defaultReplacement(): string {
    const first = [...this.query][0];
    const letter = first && /\p{L}/u.test(first) ? first.toLocaleUpperCase() : "X";
    return `${letter}.________`;
  }

  private async showAnonymized(): Promise<void> {
    const text = await this.session.exportText("txt");
    if (text !== null) {
      this.anonymized = text;
      this.view = "anonymized";
      this.renderDocument();
    }
  }

  private async download(format: "txt" | "html"): Promise<void> {
    const project = this.session.project;
    const text = await this.session.exportText(format);
    if (text === null || !project) {
      return;
    }
    try {
      const doc = this.root.ownerDocument;
      const type = format === "html" ? "text/html" : "text/plain";
      const url = URL.createObjectURL(new Blob([text], { type }));
      const anchor = doc.createElement("a");
      anchor.href = url;
      anchor.download = `${project.id}.${format}`;
      doc.body.appendChild(anchor);
      anchor.click();
      anchor.remove();
      URL.revokeObjectURL(url);
    } catch {
      // Some embedders refuse programmatic downloads; the export is
      // still reachable through the service URL.
    }
  }

  private editedReplacement(id: string): string | undefined {
    const field = this.root.querySelector(
      `input.replacement-input[data-suggestion-id="${id}"]`,
    ) as HTMLInputElement | null;
    if (!field) {
      return undefined;
    }
    const suggestion = this.session.suggestion(id);
    const value = field.value.trim();
    if (!value || !suggestion || value === suggestion.replacement) {
      return undefined;
    }
    return value;
  }

  private input(selector: string): HTMLInputElement {
    const el = this.root.querySelector(selector) as HTMLInputElement | null;
    if (!el) {
      throw new Error(`missing form element ${selector}`);
    }
    return el;
  }

  private section(selector: string): HTMLElement {
    const el = this.root.querySelector(selector) as HTMLElement | null;
    if (!el) {
      throw new Error(`missing section ${selector}`);
    }
    return el;
  }

  private renderAll(): void {
    this.renderMeta();
    this.renderBanners();
    this.renderSuggestions();
    this.renderSearch();
    this.renderDocument();
  }

  private renderMeta(): void {
    const box = this.section("#doc-meta");
    const project = this.session.project;
    if (!project) {
      box.innerHTML = `<span class="muted">no document loaded</span>`;
      return;
    }
    const counts = { pending: 0, accepted: 0, rejected: 0 };
    for (const s of project.suggestions) {
      counts[s.status] += 1;
    }
    box.innerHTML = `
      <span class="chip chip-id" id="doc-id">${escapeHtml(project.id)}</span>
      <span class="chip">${escapeHtml(project.language)}</span>
      <span class="chip" id="doc-version">v${project.version}</span>
      <span class="chip chip-accepted">${counts.accepted} accepted</span>
      <span class="chip chip-pending">${counts.pending} pending</span>
      <span class="chip chip-rejected">${counts.rejected} rejected</span>`;
  }

  private renderBanners(): void {
    const stale = this.section("#stale-banner");
    stale.toggleAttribute("hidden", !this.session.stale);

    const detector = this.section("#detector-banner");
    const down = Object.entries(this.session.detectorsDown);
    const warnings = this.session.detectorWarnings;
    if (down.length === 0 && warnings.length === 0) {
      detector.toggleAttribute("hidden", true);
      detector.innerHTML = "";
    } else {
      detector.toggleAttribute("hidden", false);
      const parts: string[] = [];
      for (const [name, reason] of down) {
        parts.push(
          `detector <strong>${escapeHtml(name)}</strong> unavailable ` +
            `(${escapeHtml(reason)}); showing the remaining suggestions`,
        );
      }
      for (const warning of warnings) {
        parts.push(escapeHtml(warning));
      }
      detector.innerHTML = parts.join("<br>");
    }

    const toast = this.section("#error-toast");
    toast.toggleAttribute("hidden", this.session.error === null);
    this.section("#error-text").textContent = this.session.error ?? "";
  }

  private renderSuggestions(): void {
    const list = this.section("#suggestion-list");
    const project = this.session.project;
    if (!project) {
      list.innerHTML = "";
      this.section("#suggestion-heading").textContent = "Suggestions";
      return;
    }
    this.section("#suggestion-heading").textContent =
      `Suggestions (${project.suggestions.length})`;
    list.innerHTML = project.suggestions.map((s) => this.suggestionItem(s)).join("");
  }

  private suggestionItem(s: Suggestion): string {
    const id = escapeHtml(s.id);
    const active = s.id === this.activeId ? " is-active" : "";
    const editable = s.status === "pending";
    const replacement = editable
      ? `<input class="replacement-input" data-suggestion-id="${id}"
           value="${escapeHtml(s.replacement)}" aria-label="replacement">`
      : `<span class="replacement">${escapeHtml(s.replacement)}</span>`;
    const acceptBtn =
      s.status === "accepted"
        ? ""
        : `<button data-action="accept" data-suggestion-id="${id}">Accept</button>`;
    const rejectBtn =
      s.status === "rejected"
        ? ""
        : `<button data-action="reject" data-suggestion-id="${id}" class="quiet">Reject</button>`;
    return `
      <li class="suggestion status-${s.status}${active}"
          data-action="select" data-suggestion-id="${id}">
        <div class="suggestion-head">
          <span class="surface">${escapeHtml(s.surface)}</span>
          <span class="chip chip-label">${escapeHtml(s.label)}</span>
          <span class="chip chip-source">${escapeHtml(s.source)}</span>
          <span class="chip chip-status chip-${s.status}">${s.status}</span>
        </div>
        <div class="suggestion-body">
          ${replacement}
          <span class="spacer"></span>
          ${acceptBtn}
          ${rejectBtn}
        </div>
      </li>`;
  }

  private renderSearch(): void {
    const box = this.section("#search-hits");
    const project = this.session.project;
    if (!project || !this.query) {
      box.innerHTML = "";
      return;
    }
    if (this.hits.length === 0) {
      box.innerHTML = `<div class="muted">no matches</div>`;
      return;
    }
    const rows = this.hits.map((hit, i) => this.hitRow(project.text, hit, i));
    const markable = project.suggestions.some(
      (s) => s.status !== "rejected" && s.surface === this.query,
    );
    rows.push(`
      <div class="hit-actions">
        <button data-action="mark-all" ${markable ? "" : "disabled"}>
          Mark all ${this.hits.length} occurrences
        </button>
      </div>`);
    box.innerHTML = rows.join("");
  }

  private hitRow(text: string, hit: Occurrence, index: number): string {
    const total = codePointLength(text);
    const before = cpSlice(text, Math.max(0, hit.start - CONTEXT_CHARS), hit.start);
    const match = cpSlice(text, hit.start, hit.end);
    const after = cpSlice(text, hit.end, Math.min(total, hit.end + CONTEXT_CHARS));
    const covered = (this.session.project?.suggestions ?? []).some(
      (s) => s.status === "accepted" && s.start <= hit.start && hit.end <= s.end,
    );
    const action = covered
      ? `<span class="hit-done">marked</span>`
      : `<button data-action="mark" data-hit="${index}">Mark</button>`;
    return `
      <div class="hit">
        <span class="hit-context">${escapeHtml(before)}<strong>${escapeHtml(
          match,
        )}</strong>${escapeHtml(after)}</span>
        ${action}
      </div>`;
  }

  private renderDocument(): void {
    const body = this.section("#doc-body");
    const tabs = {
      review: this.section("#tab-review"),
      anonymized: this.section("#tab-anonymized"),
    };
    tabs.review.classList.toggle("is-active", this.view === "review");
    tabs.anonymized.classList.toggle("is-active", this.view === "anonymized");

    const project = this.session.project;
    if (!project) {
      body.innerHTML = `<div class="muted doc-empty">Load a ruling to begin.</div>`;
      return;
    }
    if (this.view === "anonymized") {
      body.innerHTML = `<pre class="anonymized">${escapeHtml(this.anonymized)}</pre>`;
      return;
    }
    const spans = layoutSpans(project.suggestions, this.activeId, this.hits);
    body.innerHTML = `<div class="ruling">${renderDocumentHtml(project.text, spans)}</div>`;
  }

  private skeleton(): string {
    const languageOptions = LANGUAGES.map(
      (l) => `<option value="${l}">${l}</option>`,
    ).join("");
    const labelOptions = LABELS.map((l) => `<option value="${l}">${l}</option>`).join("");
    return `
<div class="review-app">
  <header class="topbar">
    <h1>Ruling review</h1>
    <div class="doc-meta" id="doc-meta"></div>
  </header>
  <div id="stale-banner" class="banner banner-stale" hidden>
    The project changed on the server since this view was loaded.
    <button data-action="reload">Reload</button>
  </div>
  <div id="detector-banner" class="banner banner-warn" hidden></div>
  <div id="error-toast" class="toast" hidden>
    <span id="error-text"></span>
    <button data-action="dismiss-error" class="quiet">Dismiss</button>
  </div>
  <div class="columns">
    <aside class="panel side">
      <details class="loader" open>
        <summary>Document</summary>
        <textarea id="ruling-text" rows="6" placeholder="Paste the ruling text"></textarea>
        <div class="row">
          <select id="ruling-language" aria-label="language">${languageOptions}</select>
          <input id="ruling-id" placeholder="document id (optional)">
          <button data-action="load">Load ruling</button>
        </div>
        <div class="row">
          <input id="open-id" placeholder="existing document id">
          <button data-action="open" class="quiet">Open</button>
        </div>
      </details>
      <div class="row controls">
        <button data-action="detect">Suggest spans</button>
        <button data-action="propagate"
                title="Repeat every non-rejected surface over the whole document">
          Propagate surfaces
        </button>
      </div>
      <section class="search">
        <div class="row">
          <input id="search-input" placeholder="Search the ruling">
          <button data-action="search">Search</button>
          <button data-action="clear-search" class="quiet">Clear</button>
        </div>
        <div class="row">
          <select id="mark-label" aria-label="label">${labelOptions}</select>
          <input id="mark-replacement" placeholder="replacement (optional)">
        </div>
        <div id="search-hits" class="search-hits"></div>
      </section>
      <section class="suggestions">
        <h2 id="suggestion-heading">Suggestions</h2>
        <ul id="suggestion-list" class="suggestion-list"></ul>
      </section>
    </aside>
    <main class="panel doc">
      <div class="tabs">
        <button data-action="view-review" id="tab-review" class="is-active">Review</button>
        <button data-action="view-anonymized" id="tab-anonymized">Anonymized</button>
        <span class="spacer"></span>
        <button data-action="download-txt" class="quiet">Download .txt</button>
        <button data-action="download-html" class="quiet">Download .html</button>
      </div>
      <div id="doc-body" class="doc-body"></div>
    </main>
  </div>
</div>`;
  }
}
