import { afterAll, beforeAll, describe, expect, it } from "vitest";
import type { Window } from "happy-dom";

import { ServiceClient } from "../src/api.js";
import { ReviewApp } from "../src/app.js";
import { ReviewSession } from "../src/session.js";
import { click, mount, RULING, setValue, textOf } from "./helpers.js";
import { startService, type RunningService } from "./service.js";

// One continuous review pass against the real service: load, decide,
// search and mark, survive a concurrent edit, read the export. The
// tests in this file build on each other in order.

const DOC_ID = "fixture-ruling";

let service: RunningService;
let client: ServiceClient;
let window: Window;
let root: HTMLElement;
let app: ReviewApp;

beforeAll(async () => {
  service = await startService();
  client = new ServiceClient(service.url);
  ({ window, root } = mount());
  app = new ReviewApp(root, new ReviewSession(new ServiceClient(service.url)));
});

afterAll(async () => {
  window?.close();
  await service?.stop();
});

function marks(status: string): Element[] {
  return [...root.querySelectorAll(`#doc-body mark[data-status="${status}"]`)];
}

async function suggestionId(surface: string, start: number): Promise<string> {
  const view = await client.getDocument(DOC_ID);
  const hit = view.suggestions.find((s) => s.surface === surface && s.start === start);
  if (!hit) {
    throw new Error(`no suggestion for ${surface} at ${start}`);
  }
  return hit.id;
}

describe("review workflow against the real service", () => {
  it("loading a ruling lists every suggestion the service found", async () => {
    setValue(root, "#ruling-text", RULING);
    setValue(root, "#ruling-id", DOC_ID);
    click(root, '[data-action="load"]');
    await app.idle();

    const view = await client.getDocument(DOC_ID);
    expect(view.suggestions).toHaveLength(6);

    const items = [...root.querySelectorAll("#suggestion-list .suggestion")];
    expect(items).toHaveLength(view.suggestions.length);
    const listed = items.map((el) => el.querySelector(".surface")?.textContent);
    for (const s of view.suggestions) {
      expect(listed).toContain(s.surface);
    }
    expect(textOf(root, "#doc-version")).toBe("v2");
    expect(marks("pending")).toHaveLength(6);
  });

  it("accepting a suggestion renders it as a completed highlight", async () => {
    const id = await suggestionId("Paul Huber", 36);
    click(root, `button[data-action="accept"][data-suggestion-id="${id}"]`);
    await app.idle();

    const done = marks("accepted");
    expect(done).toHaveLength(1);
    expect(done[0].textContent).toBe("Paul Huber");
    expect(done[0].getAttribute("class")).toContain("hl-accepted");
    expect(textOf(root, "#doc-version")).toBe("v3");

    const view = await client.getDocument(DOC_ID);
    expect(view.suggestions.find((s) => s.id === id)?.status).toBe("accepted");
  });

  it("search-and-mark covers all three occurrences of the surname", async () => {
    setValue(root, "#search-input", "Meier");
    click(root, '[data-action="search"]');
    expect(root.querySelectorAll("#search-hits .hit")).toHaveLength(3);

    click(root, 'button[data-action="mark"][data-hit="0"]');
    await app.idle();
    expect(marks("accepted").filter((m) => m.textContent === "Meier")).toHaveLength(1);

    click(root, 'button[data-action="mark-all"]');
    await app.idle();

    const done = marks("accepted").filter((m) => m.textContent === "Meier");
    expect(done).toHaveLength(3);

    const view = await client.getDocument(DOC_ID);
    const meier = view.suggestions.filter((s) => s.surface === "Meier");
    expect(meier.map((s) => s.start).sort((a, b) => a - b)).toEqual([5, 87, 232]);
    expect(meier.every((s) => s.status === "accepted")).toBe(true);
    expect(meier.every((s) => s.replacement === "M.________")).toBe(true);
  });

  it("a concurrent edit surfaces as a stale banner, reload recovers", async () => {
    // Another client rejects a suggestion behind the UI's back.
    const other = await client.getDocument(DOC_ID);
    const target = other.suggestions.find(
      (s) => s.surface === "Hans Meier" && s.status === "pending",
    );
    expect(target).toBeDefined();
    await client.decide(target!.id, "reject", other.version);

    const mine = await suggestionId("Paul Huber", 107);
    click(root, `button[data-action="accept"][data-suggestion-id="${mine}"]`);
    await app.idle();

    const banner = root.querySelector("#stale-banner")!;
    expect(banner.hasAttribute("hidden")).toBe(false);

    click(root, '[data-action="reload"]');
    await app.idle();
    expect(root.querySelector("#stale-banner")!.hasAttribute("hidden")).toBe(true);
    expect(
      root.querySelector(`#suggestion-list [data-suggestion-id="${target!.id}"]`)!
        .getAttribute("class"),
    ).toContain("status-rejected");

    // The same accept goes through once the view is fresh.
    click(root, `button[data-action="accept"][data-suggestion-id="${mine}"]`);
    await app.idle();
    expect(marks("accepted").filter((m) => m.textContent === "Paul Huber")).toHaveLength(2);
  });

  it("the anonymized view shows the service export", async () => {
    click(root, '[data-action="view-anonymized"]');
    await app.idle();

    const pane = textOf(root, "#doc-body");
    expect(pane).not.toContain("Meier");
    expect(pane).not.toContain("Paul Huber");
    expect(pane).toContain("Hans M.________");

    const exported = await client.exportDocument(DOC_ID, "txt");
    expect(exported).not.toContain("Meier");
    expect(exported).not.toContain("Paul Huber");
  });
});
