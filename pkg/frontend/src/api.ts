/** Fetch layer: typed JSON requests, inline-notice errors, stale-response gating. */

export type FetchLike = (url: string) => Promise<Response>;

export class ApiError extends Error {
  constructor(public readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (url) => fetch(url),
  ) {}

  url(path: string): string {
    return this.base + path;
  }

  async json<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.url(path));
    if (!res.ok) {
      let detail = `HTTP ${res.status}`;
      try {
        const body = (await res.json()) as { detail?: unknown };
        if (body && body.detail !== undefined) detail = String(body.detail);
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }
}

/**
 * Discards responses that arrive after a newer request was issued.
 * Callers take a token before fetching and apply the response only if the
 * token is still the latest one.
 */
export class LatestGate {
  private seq = 0;

  next(): number {
    return ++this.seq;
  }

  accept(token: number): boolean {
    return token === this.seq;
  }
}

// canonical request paths; the fixture capture script mirrors these exactly

export function frontPath(menuId: string, kpis: string[], orientation: Record<string, 1 | -1>): string {
  const spec = kpis.map((k) => `${k}:${orientation[k]}`).join(",");
  return `/menus/${menuId}/front?orientation=${spec}`;
}

export function envelopesPath(menuId: string, regimeId: number, m: number, level: number, infl: number): string {
  return `/envelopes/${menuId}/${regimeId}?m=${m}&level=${level}&infl=${infl}`;
}

export function coherenceGridPath(menuId: string, regimeId: number, lamGrid: string[], rhoGrid: string[]): string {
  return `/coherence/${menuId}/${regimeId}?lambda=${lamGrid.join(",")}&rho=${rhoGrid.join(",")}`;
}

export function coherencePointPath(menuId: string, regimeId: number, lam: string, rho: string): string {
  return `/coherence/${menuId}/${regimeId}?lambda=${lam}&rho=${rho}`;
}

export function menuPath(menuId: string): string {
  return `/menus/${menuId}`;
}
