/** Interval chart: per-KPI predictive window envelopes for a pinned regime,
 * refetched whenever (m, level, infl) changes. */

import { ApiClient, ApiError, LatestGate, envelopesPath } from "../api.js";
import { clear, el, fmtFloat, fmtNum } from "../dom.js";
import type { SessionState } from "../state.js";
import type { RegimeEnvelopes } from "../types.js";

export class EnvelopePanel {
  readonly root: HTMLElement;
  lastDoc: RegimeEnvelopes | null = null;
  lastPath: string | null = null;
  private readonly gate = new LatestGate();
  private readonly notice: HTMLElement;
  private readonly body: HTMLElement;

  constructor(private readonly api: ApiClient) {
    this.root = el("section", "envelope-panel");
    this.root.appendChild(el("h2", undefined, "Window envelopes"));
    this.notice = el("p", "notice");
    this.notice.hidden = true;
    this.body = el("div", "envelope-body");
    this.root.appendChild(this.notice);
    this.root.appendChild(this.body);
  }

  path(state: SessionState, regimeId: number): string {
    return envelopesPath(state.menuId, regimeId, state.m, state.level, state.infl);
  }

  async refresh(state: SessionState, regimeId: number | null): Promise<void> {
    const token = this.gate.next();
    if (regimeId === null) {
      if (this.gate.accept(token)) {
        clear(this.body);
        this.body.appendChild(el("p", "empty", "pin a regime to see its envelopes"));
      }
      return;
    }
    const path = this.path(state, regimeId);
    try {
      const doc = await this.api.json<RegimeEnvelopes>(path);
      if (!this.gate.accept(token)) return;
      this.lastDoc = doc;
      this.lastPath = path;
      this.notice.hidden = true;
      this.render(doc);
    } catch (err) {
      if (!this.gate.accept(token)) return;
      this.notice.hidden = false;
      this.notice.textContent =
        err instanceof ApiError ? `service error ${err.status}: ${err.message}` : String(err);
    }
  }

  private render(doc: RegimeEnvelopes): void {
    clear(this.body);
    this.body.appendChild(el(
      "p", "meta",
      `regime ${doc.regime_id} | m=${fmtNum(doc.m)} level=${fmtFloat(doc.level)} infl=${fmtFloat(doc.infl)}`,
    ));
    for (const [kpi, env] of Object.entries(doc.envelopes)) {
      const row = el("div", "env-row");
      row.dataset.kpi = kpi;
      row.dataset.lo = fmtNum(env.lo);
      row.dataset.hi = fmtNum(env.hi);
      row.dataset.point = fmtFloat(env.point);
      const label = el(
        "span", "env-label",
        `${kpi}: ${fmtFloat(env.point)} expected, window [${fmtNum(env.lo)}, ${fmtNum(env.hi)}] of ${fmtNum(env.m)}`,
      );
      const track = el("div", "env-track");
      const bar = el("div", "env-bar");
      bar.style.left = `${(100 * env.lo) / env.m}%`;
      bar.style.width = `${(100 * (env.hi - env.lo)) / env.m}%`;
      const tick = el("div", "env-point");
      tick.style.left = `${(100 * env.point) / env.m}%`;
      track.appendChild(bar);
      track.appendChild(tick);
      row.appendChild(label);
      row.appendChild(track);
      this.body.appendChild(row);
    }
  }

  /** Bars currently on screen, keyed by KPI, as parsed data attributes. */
  bars(): Record<string, { lo: number; hi: number; point: number }> {
    const out: Record<string, { lo: number; hi: number; point: number }> = {};
    this.body.querySelectorAll<HTMLElement>(".env-row").forEach((row) => {
      out[row.dataset.kpi as string] = {
        lo: Number(row.dataset.lo),
        hi: Number(row.dataset.hi),
        point: Number(row.dataset.point),
      };
    });
    return out;
  }
}
