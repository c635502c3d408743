import { Window } from "happy-dom";

import { ApiError, type ReviewApi } from "../src/api.js";
import { findOccurrences } from "../src/text.js";
import type {
  CreateDocumentBody,
  DecisionResult,
  DetectResult,
  ManualSpanBody,
  ManualSpanResult,
  ProjectView,
  Suggestion,
  UniformizeResult,
} from "../src/types.js";

export const RULING =
  "Hans Meier, Beschwerdeführer, gegen Paul Huber, Beschwerdegegner.\n" +
  "Sachverhalt:\n" +
  "A. Hans Meier wohnt in Zug. Paul Huber bestreitet dies. Die Zahlung " +
  "ging auf das Konto CH93 0076 2011 6238 5295 7.\n" +
  "Erwägungen:\n" +
  "1. Das Gericht folgt Hans Meier.";

export function mount(): { window: Window; root: HTMLElement } {
  const window = new Window();
  window.document.body.innerHTML = `<div id="app"></div>`;
  const root = window.document.getElementById("app") as unknown as HTMLElement;
  return { window, root };
}

export function click(root: HTMLElement, selector: string): void {
  const el = root.querySelector(selector) as HTMLElement | null;
  if (!el) {
    throw new Error(`nothing matches ${selector}`);
  }
  el.click();
}

export function setValue(root: HTMLElement, selector: string, value: string): void {
  const el = root.querySelector(selector) as HTMLInputElement | null;
  if (!el) {
    throw new Error(`nothing matches ${selector}`);
  }
  el.value = value;
}

export function textOf(root: HTMLElement, selector: string): string {
  const el = root.querySelector(selector);
  if (!el) {
    throw new Error(`nothing matches ${selector}`);
  }
  return (el.textContent ?? "").trim();
}

export interface SeedSpan {
  start: number;
  end: number;
  label: string;
  surface: string;
}

export function seed(text: string, start: number, end: number, label = "PER"): SeedSpan {
  return { start, end, label, surface: text.slice(start, end) };
}

const PLACEHOLDERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ";

/** In-memory stand-in for the review service.
 *
 * Mirrors the behaviors the session relies on: version bumps per
 * mutation, 409 on a stale version, decisions flip status, manual
 * spans are born accepted and refuse to overlap accepted spans, and
 * propagation copies a surface to its other occurrences as pending.
 * The real wiring is covered by the workflow test against the actual
 * service; this fake only keeps the unit tests fast.
 */
export class FakeApi implements ReviewApi {
  project: ProjectView | null = null;
  detectFinds: SeedSpan[];
  detectUnavailable: Record<string, string> = {};
  detectWarnings: string[] = [];
  decideFailsWith: number | null = null;
  calls: string[] = [];

  constructor(detectFinds: SeedSpan[] = []) {
    this.detectFinds = detectFinds;
  }

  async createDocument(body: CreateDocumentBody): Promise<ProjectView> {
    this.calls.push("createDocument");
    if (!body.text.trim()) {
      throw new ApiError(422, "document text must not be empty");
    }
    this.project = {
      id: body.id ?? "doc1",
      language: body.language,
      version: 1,
      text: body.text,
      sentences: [],
      has_gold: false,
      suggestions: [],
    };
    return structuredClone(this.project);
  }

  async getDocument(id: string): Promise<ProjectView> {
    this.calls.push("getDocument");
    const project = this.require();
    if (project.id !== id) {
      throw new ApiError(404, `no project for document ${id}`);
    }
    return structuredClone(project);
  }

  async detect(id: string, version?: number): Promise<DetectResult> {
    this.calls.push("detect");
    const project = this.require();
    if (version !== undefined && version !== project.version) {
      throw new ApiError(409, "stale version");
    }
    let added = false;
    for (const span of this.detectFinds) {
      if (project.suggestions.some((s) => s.start === span.start && s.end === span.end)) {
        continue;
      }
      this.push(span, "pending", "conventional");
      added = true;
    }
    if (added) {
      project.version += 1;
    }
    void id;
    return {
      version: project.version,
      suggestions: structuredClone(project.suggestions),
      detectors: {},
      warnings: [...this.detectWarnings],
      unavailable: { ...this.detectUnavailable },
    };
  }

  async uniformize(id: string, version: number, surfaces?: string[]): Promise<UniformizeResult> {
    this.calls.push("uniformize");
    const project = this.require();
    if (version !== project.version) {
      throw new ApiError(409, "stale version");
    }
    const pool = project.suggestions.filter(
      (s) =>
        s.status !== "rejected" && (surfaces === undefined || surfaces.includes(s.surface)),
    );
    let added = 0;
    for (const entity of pool) {
      for (const hit of findOccurrences(project.text, entity.surface)) {
        const exists = project.suggestions.some(
          (s) => s.start === hit.start && s.end === hit.end && s.label === entity.label,
        );
        if (exists) {
          continue;
        }
        this.push(
          { start: hit.start, end: hit.end, label: entity.label, surface: entity.surface },
          "pending",
          "uniformizer",
          entity.replacement,
        );
        added += 1;
      }
    }
    if (added > 0) {
      project.version += 1;
    }
    void id;
    return {
      version: project.version,
      added,
      suggestions: structuredClone(project.suggestions),
    };
  }

  async decide(
    suggestionId: string,
    decision: "accept" | "reject",
    version: number,
    replacement?: string,
  ): Promise<DecisionResult> {
    this.calls.push(`decide:${decision}`);
    const project = this.require();
    if (this.decideFailsWith !== null) {
      const status = this.decideFailsWith;
      this.decideFailsWith = null;
      throw new ApiError(status, status === 409 ? "stale version" : "decision refused");
    }
    if (version !== project.version) {
      throw new ApiError(409, "stale version");
    }
    const target = project.suggestions.find((s) => s.id === suggestionId);
    if (!target) {
      throw new ApiError(404, `no suggestion ${suggestionId}`);
    }
    target.status = decision === "accept" ? "accepted" : "rejected";
    if (replacement !== undefined) {
      target.replacement = replacement;
    }
    target.decided_by = "reviewer";
    target.decided_at = "2026-01-01T00:00:00Z";
    project.version += 1;
    return { version: project.version, suggestion: structuredClone(target) };
  }

  async addManualSpan(
    id: string,
    span: ManualSpanBody,
    version: number,
  ): Promise<ManualSpanResult> {
    this.calls.push("addManualSpan");
    const project = this.require();
    if (version !== project.version) {
      throw new ApiError(409, "stale version");
    }
    const clash = project.suggestions.find(
      (s) => s.status === "accepted" && span.start < s.end && s.start < span.end,
    );
    if (clash) {
      throw new ApiError(422, `manual span overlaps accepted ${clash.id}`);
    }
    const created = this.push(
      {
        start: span.start,
        end: span.end,
        label: span.label,
        surface: project.text.slice(span.start, span.end),
      },
      "accepted",
      "manual",
      span.replacement,
    );
    project.version += 1;
    void id;
    return {
      version: project.version,
      suggestion: structuredClone(created),
      suggestions: structuredClone(project.suggestions),
    };
  }

  async exportDocument(id: string, format: "txt" | "html"): Promise<string> {
    this.calls.push(`export:${format}`);
    const project = this.require();
    const accepted = project.suggestions
      .filter((s) => s.status === "accepted")
      .sort((a, b) => b.start - a.start);
    let text = project.text;
    for (const s of accepted) {
      text = text.slice(0, s.start) + s.replacement + text.slice(s.end);
    }
    void id;
    return format === "html" ? `<pre>${text}</pre>` : text;
  }

  private require(): ProjectView {
    if (!this.project) {
      throw new ApiError(404, "no project loaded");
    }
    return this.project;
  }

  private push(
    span: SeedSpan,
    status: Suggestion["status"],
    source: string,
    replacement?: string,
  ): Suggestion {
    const project = this.require();
    const known = new Map(project.suggestions.map((s) => [s.surface, s.replacement]));
    const fallback = `${PLACEHOLDERS[known.size % PLACEHOLDERS.length]}.________`;
    const suggestion: Suggestion = {
      id: `${project.id}:${project.suggestions.length}`,
      start: span.start,
      end: span.end,
      label: span.label,
      surface: span.surface,
      source,
      confidence: source === "manual" ? 1.0 : 0.8,
      replacement: replacement ?? known.get(span.surface) ?? fallback,
      status,
      decided_by: status === "accepted" ? "reviewer" : null,
      decided_at: status === "accepted" ? "2026-01-01T00:00:00Z" : null,
    };
    project.suggestions.push(suggestion);
    project.suggestions.sort((a, b) => a.start - b.start || a.end - b.end);
    return suggestion;
  }
}
