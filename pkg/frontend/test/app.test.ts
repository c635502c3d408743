import { afterEach, beforeEach, describe, expect, it } from "vitest";
import type { Window } from "happy-dom";

import { ReviewApp } from "../src/app.js";
import { ReviewSession } from "../src/session.js";
import { click, FakeApi, mount, RULING, seed, setValue, textOf } from "./helpers.js";

const FINDS = [
  seed(RULING, 0, 10),
  seed(RULING, 36, 46),
  seed(RULING, 82, 92),
  seed(RULING, 107, 117),
  seed(RULING, 227, 237),
];

let window: Window;
let root: HTMLElement;
let api: FakeApi;
let app: ReviewApp;

beforeEach(() => {
  ({ window, root } = mount());
  api = new FakeApi(FINDS);
  app = new ReviewApp(root, new ReviewSession(api));
});

afterEach(() => {
  window.close();
});

async function loadRuling(): Promise<void> {
  setValue(root, "#ruling-text", RULING);
  click(root, '[data-action="load"]');
  await app.idle();
}

function marks(status: string): Element[] {
  return [...root.querySelectorAll(`#doc-body mark[data-status="${status}"]`)];
}

describe("loading a ruling", () => {
  it("lists every suggestion and draws the document", async () => {
    await loadRuling();
    expect(root.querySelectorAll("#suggestion-list .suggestion")).toHaveLength(5);
    expect(textOf(root, "#doc-version")).toBe("v2");
    expect(marks("pending")).toHaveLength(5);
    expect(textOf(root, "#doc-body")).toContain("Beschwerdeführer");
  });

  it("shows an error toast when the document is refused", async () => {
    click(root, '[data-action="load"]');
    await app.idle();
    const toast = root.querySelector("#error-toast")!;
    expect(toast.hasAttribute("hidden")).toBe(false);
    expect(textOf(root, "#error-text")).toContain("empty");

    click(root, '[data-action="dismiss-error"]');
    expect(root.querySelector("#error-toast")!.hasAttribute("hidden")).toBe(true);
  });

  it("keeps the partial list and warns when a detector is down", async () => {
    api.detectUnavailable = { model: "connection refused" };
    await loadRuling();
    const banner = root.querySelector("#detector-banner")!;
    expect(banner.hasAttribute("hidden")).toBe(false);
    expect(banner.textContent).toContain("model");
    expect(root.querySelectorAll("#suggestion-list .suggestion")).toHaveLength(5);
  });
});

describe("deciding", () => {
  it("accept turns the span into a completed highlight", async () => {
    await loadRuling();
    click(root, 'button[data-action="accept"][data-suggestion-id="doc1:1"]');
    await app.idle();

    const done = marks("accepted");
    expect(done).toHaveLength(1);
    expect(done[0].textContent).toBe("Paul Huber");
    expect(done[0].getAttribute("class")).toContain("hl-accepted");
    expect(textOf(root, "#doc-version")).toBe("v3");
  });

  it("reject removes the highlight", async () => {
    await loadRuling();
    click(root, 'button[data-action="reject"][data-suggestion-id="doc1:0"]');
    await app.idle();
    expect(marks("pending")).toHaveLength(4);
    expect(root.querySelector('#suggestion-list .suggestion.status-rejected')).not.toBeNull();
  });

  it("selecting a suggestion marks it as the current setting", async () => {
    await loadRuling();
    click(root, '#suggestion-list [data-suggestion-id="doc1:0"]');
    const current = root.querySelectorAll("#doc-body mark.hl-current");
    expect(current).toHaveLength(1);
    expect(current[0].textContent).toBe("Hans Meier");
  });

  it("offers a reload when the project is stale, and recovers", async () => {
    await loadRuling();
    api.decideFailsWith = 409;
    click(root, 'button[data-action="accept"][data-suggestion-id="doc1:0"]');
    await app.idle();

    const banner = root.querySelector("#stale-banner")!;
    expect(banner.hasAttribute("hidden")).toBe(false);
    expect(marks("accepted")).toHaveLength(0);

    click(root, '[data-action="reload"]');
    await app.idle();
    expect(root.querySelector("#stale-banner")!.hasAttribute("hidden")).toBe(true);
  });

  it("sends the edited replacement from the inline field", async () => {
    await loadRuling();
    setValue(root, 'input.replacement-input[data-suggestion-id="doc1:0"]', "Der Kläger");
    click(root, 'button[data-action="accept"][data-suggestion-id="doc1:0"]');
    await app.idle();
    expect(api.project?.suggestions.find((s) => s.id === "doc1:0")?.replacement).toBe(
      "Der Kläger",
    );
  });
});

describe("search and mark", () => {
  async function search(query = "Meier"): Promise<void> {
    setValue(root, "#search-input", query);
    click(root, '[data-action="search"]');
  }

  it("lists every occurrence and highlights them in the document", async () => {
    await loadRuling();
    await search();
    expect(root.querySelectorAll("#search-hits .hit")).toHaveLength(3);
    // Matches inside pending suggestion spans stay suggestion-colored,
    // so none of the three surnames render as bare matches here.
    expect(marks("match")).toHaveLength(0);
    click(root, '[data-action="clear-search"]');
    expect(root.querySelectorAll("#search-hits .hit")).toHaveLength(0);
  });

  it("marks one occurrence, then all of them", async () => {
    await loadRuling();
    await search();

    const markAllBefore = root.querySelector('button[data-action="mark-all"]')!;
    expect(markAllBefore.hasAttribute("disabled")).toBe(true);

    click(root, 'button[data-action="mark"][data-hit="0"]');
    await app.idle();
    expect(marks("accepted")).toHaveLength(1);
    expect(textOf(root, "#search-hits")).toContain("marked");

    const markAll = root.querySelector('button[data-action="mark-all"]')!;
    expect(markAll.hasAttribute("disabled")).toBe(false);
    (markAll as HTMLElement).click();
    await app.idle();

    const done = marks("accepted");
    expect(done).toHaveLength(3);
    expect(done.every((m) => m.textContent === "Meier")).toBe(true);
  });

  it("treats occurrences inside accepted spans as already marked", async () => {
    await loadRuling();
    click(root, 'button[data-action="accept"][data-suggestion-id="doc1:0"]');
    await app.idle();

    await search();
    const firstHit = root.querySelector("#search-hits .hit")!;
    expect(firstHit.textContent).toContain("marked");
    expect(firstHit.querySelector('button[data-action="mark"]')).toBeNull();
  });

  it("reports a conflict when the mark overlaps an accepted span", async () => {
    await loadRuling();
    click(root, 'button[data-action="accept"][data-suggestion-id="doc1:0"]');
    await app.idle();

    // "Meier," reaches one character past the accepted "Hans Meier"
    // span, so it is not covered, but marking it must collide.
    await search("Meier,");
    click(root, 'button[data-action="mark"][data-hit="0"]');
    await app.idle();

    expect(textOf(root, "#error-text")).toContain("overlaps accepted");
    expect(marks("accepted")).toHaveLength(1);
  });

  it("does nothing for an empty query", async () => {
    await loadRuling();
    click(root, '[data-action="search"]');
    expect(root.querySelectorAll("#search-hits .hit")).toHaveLength(0);
    expect(marks("match")).toHaveLength(0);
  });
});

describe("export view", () => {
  it("shows the anonymized text with the accepted replacement applied", async () => {
    await loadRuling();
    click(root, 'button[data-action="accept"][data-suggestion-id="doc1:1"]');
    await app.idle();

    click(root, '[data-action="view-anonymized"]');
    await app.idle();

    const pane = textOf(root, "#doc-body");
    expect(pane).toContain("B.________");
    expect(pane).not.toContain("Paul Huber, Beschwerdegegner");
    expect(root.querySelector("#tab-anonymized")!.getAttribute("class")).toContain("is-active");

    click(root, '[data-action="view-review"]');
    expect(textOf(root, "#doc-body")).toContain("Paul Huber");
  });
});
