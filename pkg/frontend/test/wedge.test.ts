import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { fmtFloat } from "../src/dom.js";
import { defaultState } from "../src/state.js";
import type { CoherenceGrid, CoherencePoint, MenuDoc } from "../src/types.js";
import { WedgeView } from "../src/views/wedge.js";
import { fakeFetch, fixtureFor, fixtureJson, loadManifest } from "./helpers.js";

const manifest = loadManifest();
const menu = fixtureJson<MenuDoc>("menu.json");
const RIDS = manifest.front_regimes.slice(0, 3);

function makeState() {
  return defaultState(menu.menu_id, menu.kpis, menu.orientation, menu.m, menu.level);
}

describe("WedgeView", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  async function render() {
    const { fetchFn, requests } = fakeFetch(manifest);
    const view = new WedgeView(new ApiClient("", fetchFn));
    const state = makeState();
    document.body.appendChild(view.root);
    await view.refresh(state, RIDS);
    return { view, state, requests };
  }

  function grids(state: ReturnType<typeof makeState>, view: WedgeView): CoherenceGrid[] {
    return view.paths(state, RIDS).map((p) => fixtureJson(fixtureFor(manifest, p).file));
  }

  it("cell fractions are the mean of the per-regime coherence bits", async () => {
    const { view, state } = await render();
    const fixtureGrids = grids(state, view);
    const cells = view.root.querySelectorAll<HTMLElement>("td.cell");
    expect(cells.length).toBe(state.lambdaGrid.length * state.rhoGrid.length);
    for (const cell of cells) {
      const i = state.lambdaGrid.indexOf(cell.dataset.lambda!);
      const j = state.rhoGrid.indexOf(cell.dataset.rho!);
      const want =
        fixtureGrids.reduce((acc, g) => acc + g.intersection[i][j], 0) / fixtureGrids.length;
      expect(Number(cell.dataset.fraction)).toBeCloseTo(want, 12);
    }
  });

  it("union and intersection outlines mark any / all coherent regimes", async () => {
    const { view, state } = await render();
    const fixtureGrids = grids(state, view);
    for (const cell of view.root.querySelectorAll<HTMLElement>("td.cell")) {
      const i = state.lambdaGrid.indexOf(cell.dataset.lambda!);
      const j = state.rhoGrid.indexOf(cell.dataset.rho!);
      const any = fixtureGrids.some((g) => g.intersection[i][j] === 1);
      const all = fixtureGrids.every((g) => g.intersection[i][j] === 1);
      expect(cell.classList.contains("outline-union")).toBe(any);
      expect(cell.classList.contains("outline-intersection")).toBe(all);
    }
  });

  it("hover readout mirrors the service verdicts at that cost point", async () => {
    const { view, state } = await render();
    await view.hover(state, "1", "0.6");
    const doc = fixtureJson<CoherencePoint>(
      fixtureFor(manifest, `/coherence/demo/${RIDS[0]}?lambda=1&rho=0.6`).file,
    );
    expect(view.lastReadout).toEqual(doc);
    const readout = view.root.querySelector(".wedge-readout") as HTMLElement;
    const head = readout.querySelector(".readout-head")!.textContent!;
    expect(head).toContain(doc.coherent ? "coherent" : "incoherent");
    expect(head).toContain(`lambda=${fmtFloat(doc.lambda)}`);
    const failing = [...readout.querySelectorAll<HTMLElement>(".failing")];
    const wantFailing = doc.regions.filter((v) => v.occupied && !v.coherent);
    expect(failing.map((f) => f.dataset.region)).toEqual(wantFailing.map((v) => v.region));
    for (const [idx, v] of wantFailing.entries()) {
      expect(failing[idx].textContent).toContain(v.action);
      if (v.eta !== null) expect(failing[idx].textContent).toContain(fmtFloat(v.eta));
    }
    if (doc.rejection_band_violated) {
      expect(readout.querySelector(".readout-band")).not.toBeNull();
    }
  });

  it("a coherent point reads out clean", async () => {
    const { view, state } = await render();
    await view.hover(state, "1", "0.2");
    const doc = fixtureJson<CoherencePoint>(
      fixtureFor(manifest, `/coherence/demo/${RIDS[0]}?lambda=1&rho=0.2`).file,
    );
    const readout = view.root.querySelector(".wedge-readout") as HTMLElement;
    if (doc.coherent) {
      expect(readout.querySelector(".ok")).not.toBeNull();
      expect(readout.querySelectorAll(".failing").length).toBe(0);
    } else {
      expect(readout.querySelectorAll(".failing").length).toBeGreaterThan(0);
    }
  });

  it("single-regime selection yields a 0/1 heatmap", async () => {
    const { fetchFn } = fakeFetch(manifest);
    const view = new WedgeView(new ApiClient("", fetchFn));
    const state = makeState();
    await view.refresh(state, [RIDS[0]]);
    const fractions = [...view.root.querySelectorAll<HTMLElement>("td.cell")]
      .map((c) => Number(c.dataset.fraction));
    expect(fractions.every((f) => f === 0 || f === 1)).toBe(true);
  });
});
