import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, LatestGate, coherenceGridPath, coherencePointPath, envelopesPath, frontPath, menuPath } from "../src/api.js";
import { fakeFetch, loadManifest } from "./helpers.js";

const manifest = loadManifest();

describe("canonical request paths", () => {
  it("match the captured fixture urls exactly", () => {
    expect(manifest.responses[menuPath("demo")]).toBeDefined();
    expect(manifest.responses[frontPath("demo", ["loss", "hedge1", "correct1"],
                                        { loss: -1, hedge1: -1, correct1: 1 })]).toBeDefined();
    expect(manifest.responses[envelopesPath("demo", manifest.front_regimes[0], 100, 0.95, 1)])
      .toBeDefined();
    expect(manifest.responses[coherenceGridPath("demo", manifest.front_regimes[0],
                                                manifest.lambda_grid, manifest.rho_grid)])
      .toBeDefined();
    expect(manifest.responses[coherencePointPath("demo", manifest.front_regimes[0], "1", "0.6")])
      .toBeDefined();
  });
});

describe("ApiClient", () => {
  it("parses JSON bodies", async () => {
    const { fetchFn } = fakeFetch(manifest);
    const api = new ApiClient("", fetchFn);
    const menu = await api.json<{ menu_id: string }>(menuPath("demo"));
    expect(menu.menu_id).toBe("demo");
  });

  it("maps error bodies to ApiError with status and detail", async () => {
    const { fetchFn } = fakeFetch(manifest);
    const api = new ApiClient("", fetchFn);
    await expect(api.json(menuPath("no-such-menu"))).rejects.toMatchObject({
      name: "ApiError",
      status: 404,
    });
    try {
      await api.json(menuPath("no-such-menu"));
    } catch (err) {
      expect((err as ApiError).message).toContain("no-such-menu");
    }
  });

  it("prefixes the base url", async () => {
    const seen: string[] = [];
    const api = new ApiClient("http://example.test", async (url) => {
      seen.push(url);
      return new Response("{}", { status: 200 });
    });
    await api.json("/datasets");
    expect(seen).toEqual(["http://example.test/datasets"]);
  });
});

describe("LatestGate", () => {
  it("accepts only the newest token", () => {
    const gate = new LatestGate();
    const first = gate.next();
    const second = gate.next();
    expect(gate.accept(first)).toBe(false);
    expect(gate.accept(second)).toBe(true);
  });

  it("discards a slow stale response end to end", async () => {
    const gate = new LatestGate();
    const applied: string[] = [];
    async function request(label: string, delayMs: number): Promise<void> {
      const token = gate.next();
      await new Promise((resolve) => setTimeout(resolve, delayMs));
      if (gate.accept(token)) applied.push(label);
    }
    await Promise.all([request("slow-old", 30), request("fast-new", 1)]);
    expect(applied).toEqual(["fast-new"]);
  });
});
