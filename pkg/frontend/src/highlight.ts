import { toUtf16All, type Occurrence } from "./text.js";
import type { Suggestion } from "./types.js";

/** One stretch of the document drawn as a highlight. Offsets are code
 * points, like everything the service sends. */
export interface RenderSpan {
  start: number;
  end: number;
  status: "accepted" | "pending" | "match";
  current: boolean;
  id: string | null;
  title: string;
}

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Decide which spans the document pane draws.
 *
 * Accepted spans go first; the service refuses decisions that would
 * make them overlap, so among themselves they are safe.  Pending spans
 * and search matches are laid in afterwards and dropped where they
 * collide with something already placed.  Rejected suggestions are
 * not drawn at all.
 */
export function layoutSpans(
  suggestions: Suggestion[],
  activeId: string | null,
  matches: Occurrence[] = [],
): RenderSpan[] {
  const chosen: RenderSpan[] = [];
  const collides = (start: number, end: number): boolean =>
    chosen.some((s) => start < s.end && s.start < end);

  const byStart = (a: Suggestion, b: Suggestion): number =>
    a.start - b.start || b.end - a.end;

  for (const s of suggestions.filter((s) => s.status === "accepted").sort(byStart)) {
    if (collides(s.start, s.end)) {
      continue;
    }
    chosen.push({
      start: s.start,
      end: s.end,
      status: "accepted",
      current: s.id === activeId,
      id: s.id,
      title: `${s.label}, replaced by ${s.replacement}`,
    });
  }
  for (const s of suggestions.filter((s) => s.status === "pending").sort(byStart)) {
    if (collides(s.start, s.end)) {
      continue;
    }
    chosen.push({
      start: s.start,
      end: s.end,
      status: "pending",
      current: s.id === activeId,
      id: s.id,
      title: `${s.label} suggestion, would become ${s.replacement}`,
    });
  }
  for (const m of matches) {
    if (m.start >= m.end || collides(m.start, m.end)) {
      continue;
    }
    chosen.push({
      start: m.start,
      end: m.end,
      status: "match",
      current: false,
      id: null,
      title: "search match",
    });
  }
  return chosen.sort((a, b) => a.start - b.start);
}

/** Render the document with its highlights as HTML.
 *
 * `spans` must be sorted and non-overlapping, which is what
 * `layoutSpans` returns.  Newlines survive as-is; the pane renders
 * with `white-space: pre-wrap`.
 */
export function renderDocumentHtml(text: string, spans: RenderSpan[]): string {
  const boundaries: number[] = [];
  for (const span of spans) {
    boundaries.push(span.start, span.end);
  }
  const utf16 = toUtf16All(text, boundaries);
  const parts: string[] = [];
  let cursor = 0;
  spans.forEach((span, i) => {
    const from = utf16[2 * i];
    const to = utf16[2 * i + 1];
    if (from > cursor) {
      parts.push(escapeHtml(text.slice(cursor, from)));
    }
    const classes = ["hl", `hl-${span.status}`];
    if (span.current) {
      classes.push("hl-current");
    }
    const select = span.id
      ? ` data-action="select" data-suggestion-id="${escapeHtml(span.id)}"`
      : "";
    parts.push(
      `<mark class="${classes.join(" ")}"${select} data-status="${span.status}"` +
        ` title="${escapeHtml(span.title)}">${escapeHtml(text.slice(from, to))}</mark>`,
    );
    cursor = to;
  });
  parts.push(escapeHtml(text.slice(cursor)));
  return parts.join("");
}
