/** Fixture-backed fetch: serves exact bytes captured from the live service. */

import { readFileSync } from "node:fs";
import path from "node:path";

import type { FetchLike } from "../src/api.js";

// vitest runs with the frontend directory as its root
const FIXTURES = path.join(process.cwd(), "test", "fixtures");

interface ManifestEntry {
  file: string;
  status: number;
}

export interface Manifest {
  menu_id: string;
  front_regimes: number[];
  lambda_grid: string[];
  rho_grid: string[];
  responses: Record<string, ManifestEntry>;
}

export function loadManifest(): Manifest {
  return JSON.parse(readFileSync(path.join(FIXTURES, "manifest.json"), "utf-8"));
}

export function fixtureBytes(name: string): Buffer {
  return readFileSync(path.join(FIXTURES, name));
}

export function fixtureJson<T>(name: string): T {
  return JSON.parse(fixtureBytes(name).toString("utf-8")) as T;
}

export function fixtureFor(manifest: Manifest, requestPath: string): ManifestEntry {
  const entry = manifest.responses[requestPath];
  if (!entry) {
    throw new Error(`no fixture captured for ${requestPath}`);
  }
  return entry;
}

/** A fetch that replays captured responses and records every request path. */
export function fakeFetch(manifest: Manifest): { fetchFn: FetchLike; requests: string[] } {
  const requests: string[] = [];
  const fetchFn: FetchLike = async (url: string) => {
    requests.push(url);
    const entry = manifest.responses[url];
    if (!entry) {
      return new Response(JSON.stringify({ detail: `no fixture for ${url}` }), {
        status: 599,
        headers: { "content-type": "application/json" },
      });
    }
    return new Response(fixtureBytes(entry.file), {
      status: entry.status,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetchFn, requests };
}

/** Every raw decimal token in a fixture, for byte-match assertions. */
export function rawTokens(name: string): Set<string> {
  const text = fixtureBytes(name).toString("utf-8");
  return new Set(text.match(/-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?/g) ?? []);
}
