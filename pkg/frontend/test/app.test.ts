/** Whole-app wiring: boot, pin, orientation toggle, window controls. */

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ExplorerApp } from "../src/app.js";
import type { MenuDoc } from "../src/types.js";
import { fakeFetch, fixtureJson, loadManifest } from "./helpers.js";

const manifest = loadManifest();
const menu = fixtureJson<MenuDoc>("menu.json");
const RID = manifest.front_regimes[0];

async function boot() {
  const { fetchFn, requests } = fakeFetch(manifest);
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = await ExplorerApp.boot(new ApiClient("", fetchFn), "demo", root,
                                     window.localStorage);
  return { app, root, requests };
}

describe("ExplorerApp", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
    window.localStorage.clear();
  });

  it("boots with the front and an envelope hint, wedge over the whole front", async () => {
    const { app, root } = await boot();
    expect(root.querySelectorAll("circle.point").length).toBe(menu.points.length);
    expect(root.querySelector(".envelope-panel .empty")!.textContent).toContain("pin");
    expect(app.selectedRegimes()).toEqual(manifest.front_regimes);
    expect(root.querySelectorAll(".wedge-grid td.cell").length).toBeGreaterThan(0);
  });

  it("clicking a point pins it and fills the envelope panel", async () => {
    const { app, root } = await boot();
    const dot = root.querySelector(`circle[data-regime-id="${RID}"]`) as SVGCircleElement;
    dot.dispatchEvent(new MouseEvent("click"));
    await new Promise((r) => setTimeout(r, 20));
    expect(app.state.pinned).toEqual([RID]);
    expect(root.querySelectorAll(".env-row").length).toBeGreaterThan(0);
    // pinned selection narrows the wedge aggregation to that regime
    expect(app.selectedRegimes()).toEqual([RID]);
    const fractions = [...root.querySelectorAll<HTMLElement>("td.cell")]
      .map((c) => Number(c.dataset.fraction));
    expect(fractions.every((f) => f === 0 || f === 1)).toBe(true);
  });

  it("orientation toggle refetches the front and persists the session", async () => {
    const { app, root, requests } = await boot();
    const before = requests.length;
    const toggle = root.querySelector('button[data-kpi="correct1"]') as HTMLButtonElement;
    toggle.dispatchEvent(new MouseEvent("click"));
    await new Promise((r) => setTimeout(r, 20));
    expect(app.state.orientation.correct1).toBe(-1);
    expect(requests.slice(before).some((u) => u.includes("correct1:-1"))).toBe(true);
    const saved = window.localStorage.getItem("coverplan-explorer-session");
    expect(saved).not.toBeNull();
    expect(JSON.parse(saved!).orientation.correct1).toBe(-1);
  });

  it("restores a persisted session on boot", async () => {
    const first = await boot();
    const dot = first.root.querySelector(`circle[data-regime-id="${RID}"]`) as SVGCircleElement;
    dot.dispatchEvent(new MouseEvent("click"));
    await new Promise((r) => setTimeout(r, 20));
    document.body.innerHTML = "";
    const second = await boot();
    expect(second.app.state.pinned).toEqual([RID]);
    expect(second.root.querySelectorAll(".env-row").length).toBeGreaterThan(0);
  });

  it("window control changes refetch envelopes with the new settings", async () => {
    const { app, requests } = await boot();
    await app.pin(RID);
    const before = requests.length;
    await app.setWindow({ infl: 2 });
    const tail = requests.slice(before);
    expect(tail.some((u) => u.includes("infl=2"))).toBe(true);
  });
});
