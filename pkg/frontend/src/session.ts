import { ApiError, type ReviewApi } from "./api.js";
import type { ProjectView, Suggestion } from "./types.js";

export type SessionListener = () => void;

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return err.detail || `request failed with status ${err.status}`;
  }
  return err instanceof Error ? err.message : String(err);
}

/** Client-side copy of one review project.
 *
 * Decisions are optimistic: the suggestion flips locally first, then
 * the service call settles and either confirms (the server copy wins)
 * or rolls the snapshot back.  A 409 additionally raises `stale`, so
 * the UI can offer a reload instead of showing an error.  Everything
 * else (marking, propagation) waits for the server, because only the
 * server knows the new ids and placeholders.
 */
export class ReviewSession {
  project: ProjectView | null = null;
  stale = false;
  error: string | null = null;
  detectorWarnings: string[] = [];
  detectorsDown: Record<string, string> = {};

  private listeners: SessionListener[] = [];

  constructor(private readonly api: ReviewApi) {}

  onChange(listener: SessionListener): void {
    this.listeners.push(listener);
  }

  clearError(): void {
    this.error = null;
    this.emit();
  }

  suggestion(id: string): Suggestion | undefined {
    return this.project?.suggestions.find((s) => s.id === id);
  }

  async load(text: string, language: string, id?: string): Promise<boolean> {
    try {
      const body = id ? { text, language, id } : { text, language };
      this.project = await this.api.createDocument(body);
      this.stale = false;
      this.error = null;
      this.detectorWarnings = [];
      this.detectorsDown = {};
      this.emit();
      return true;
    } catch (err) {
      this.error = describe(err);
      this.emit();
      return false;
    }
  }

  async open(id: string): Promise<boolean> {
    try {
      this.project = await this.api.getDocument(id);
      this.stale = false;
      this.error = null;
      this.detectorWarnings = [];
      this.detectorsDown = {};
      this.emit();
      return true;
    } catch (err) {
      this.error = describe(err);
      this.emit();
      return false;
    }
  }

  /** Re-fetch the server state, e.g. after a version conflict. */
  async reload(): Promise<boolean> {
    const project = this.project;
    if (!project) {
      return false;
    }
    return this.open(project.id);
  }

  async detect(): Promise<boolean> {
    const project = this.project;
    if (!project) {
      return false;
    }
    try {
      const result = await this.api.detect(project.id, project.version);
      project.version = result.version;
      project.suggestions = result.suggestions;
      this.detectorWarnings = result.warnings;
      this.detectorsDown = result.unavailable;
      this.emit();
      return true;
    } catch (err) {
      return this.fail(err);
    }
  }

  async accept(id: string, replacement?: string): Promise<boolean> {
    return this.decide(id, "accept", replacement);
  }

  async reject(id: string): Promise<boolean> {
    return this.decide(id, "reject");
  }

  async markSpan(
    start: number,
    end: number,
    label: string,
    replacement: string,
  ): Promise<Suggestion | null> {
    const project = this.project;
    if (!project) {
      return null;
    }
    try {
      const result = await this.api.addManualSpan(
        project.id,
        { start, end, label, replacement },
        project.version,
      );
      project.version = result.version;
      project.suggestions = result.suggestions;
      this.emit();
      return result.suggestion;
    } catch (err) {
      this.fail(err);
      return null;
    }
  }

  /** Propagate surfaces over the whole document; returns how many
   * suggestions that added, or -1 on failure. */
  async propagate(surfaces?: string[]): Promise<number> {
    const project = this.project;
    if (!project) {
      return -1;
    }
    try {
      const result = await this.api.uniformize(project.id, project.version, surfaces);
      project.version = result.version;
      project.suggestions = result.suggestions;
      this.emit();
      return result.added;
    } catch (err) {
      this.fail(err);
      return -1;
    }
  }

  /** Mark every occurrence of a surface: propagate it document-wide,
   * then accept whatever is still pending under that surface. */
  async markAll(surface: string): Promise<boolean> {
    const added = await this.propagate([surface]);
    if (added < 0) {
      return false;
    }
    const pending = (this.project?.suggestions ?? []).filter(
      (s) => s.status === "pending" && s.surface === surface,
    );
    for (const s of pending) {
      if (!(await this.accept(s.id))) {
        return false;
      }
    }
    return true;
  }

  async exportText(format: "txt" | "html"): Promise<string | null> {
    const project = this.project;
    if (!project) {
      return null;
    }
    try {
      return await this.api.exportDocument(project.id, format);
    } catch (err) {
      this.fail(err);
      return null;
    }
  }

  private async decide(
    id: string,
    decision: "accept" | "reject",
    replacement?: string,
  ): Promise<boolean> {
    const project = this.project;
    if (!project) {
      return false;
    }
    const target = project.suggestions.find((s) => s.id === id);
    if (!target) {
      this.error = `unknown suggestion ${id}`;
      this.emit();
      return false;
    }
    const snapshot = structuredClone(project);
    target.status = decision === "accept" ? "accepted" : "rejected";
    if (replacement !== undefined) {
      target.replacement = replacement;
    }
    this.emit();
    try {
      const result = await this.api.decide(id, decision, snapshot.version, replacement);
      project.version = result.version;
      const at = project.suggestions.findIndex((s) => s.id === id);
      if (at >= 0) {
        project.suggestions[at] = result.suggestion;
      }
      this.emit();
      return true;
    } catch (err) {
      this.project = snapshot;
      return this.fail(err);
    }
  }

  private fail(err: unknown): false {
    if (err instanceof ApiError && err.status === 409) {
      this.stale = true;
    } else {
      this.error = describe(err);
    }
    this.emit();
    return false;
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }
}
