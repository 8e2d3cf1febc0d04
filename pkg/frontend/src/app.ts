/** Explorer shell: toolbar state drives the three views; every number on
 * screen comes from the service. */

import { ApiClient, menuPath } from "./api.js";
import { clear, el } from "./dom.js";
import { SessionState, defaultState, flipOrientation, restoreState, serializeState, togglePin } from "./state.js";
import type { MenuDoc } from "./types.js";
import { EnvelopePanel } from "./views/envelopes.js";
import { shortlistCsv } from "./views/exporter.js";
import { FrontView } from "./views/front.js";
import { WedgeView } from "./views/wedge.js";

const SESSION_KEY = "coverplan-explorer-session";

export class ExplorerApp {
  state: SessionState;
  readonly front: FrontView;
  readonly envelopes: EnvelopePanel;
  readonly wedge: WedgeView;
  private readonly toolbar: HTMLElement;
  private menu: MenuDoc;

  constructor(
    private readonly api: ApiClient,
    menu: MenuDoc,
    private readonly root: HTMLElement,
    restored: SessionState | null = null,
  ) {
    this.menu = menu;
    this.state = restored ?? defaultState(menu.menu_id, menu.kpis, menu.orientation,
                                          menu.m, menu.level);
    this.front = new FrontView(this.api, (rid) => this.pin(rid));
    this.envelopes = new EnvelopePanel(this.api);
    this.wedge = new WedgeView(this.api);
    this.toolbar = el("header", "toolbar");
    this.buildToolbar();
    root.appendChild(this.toolbar);
    root.appendChild(this.front.root);
    root.appendChild(this.envelopes.root);
    root.appendChild(this.wedge.root);
  }

  static async boot(api: ApiClient, menuId: string, root: HTMLElement,
                    storage: Storage | null = null): Promise<ExplorerApp> {
    const menu = await api.json<MenuDoc>(menuPath(menuId));
    let restored: SessionState | null = null;
    const raw = storage?.getItem(SESSION_KEY);
    if (raw) {
      try {
        const candidate = restoreState(raw);
        if (candidate.menuId === menuId) restored = candidate;
      } catch {
        restored = null; // corrupted session; fall back to defaults
      }
    }
    const app = new ExplorerApp(api, menu, root, restored);
    await app.refreshAll();
    return app;
  }

  private buildToolbar(): void {
    clear(this.toolbar);
    this.toolbar.appendChild(el("h1", undefined, `menu ${this.state.menuId}`));

    const orientBox = el("div", "orientation-toggles");
    for (const kpi of this.state.kpis) {
      const btn = el("button", "orient-toggle");
      btn.dataset.kpi = kpi;
      btn.textContent = `${kpi} ${this.state.orientation[kpi] === 1 ? "+" : "-"}`;
      btn.addEventListener("click", () => void this.flip(kpi));
      orientBox.appendChild(btn);
    }
    this.toolbar.appendChild(orientBox);

    const controls = el("div", "window-controls");
    controls.appendChild(this.numberInput("m", this.state.m, 1, (v) => {
      if (!(v >= 1)) return this.showToolbarNotice("window m must be >= 1");
      void this.setWindow({ m: Math.floor(v) });
    }));
    controls.appendChild(this.numberInput("level", this.state.level, 0.01, (v) => {
      if (!(v > 0 && v < 1)) return this.showToolbarNotice("level must lie in (0, 1)");
      void this.setWindow({ level: v });
    }));
    controls.appendChild(this.numberInput("infl", this.state.infl, 0.5, (v) => {
      if (!(v >= 1)) return this.showToolbarNotice("infl must be >= 1");
      void this.setWindow({ infl: v });
    }));
    this.toolbar.appendChild(controls);

    const exportBtn = el("button", "export-shortlist", "export shortlist CSV");
    exportBtn.addEventListener("click", () => this.download());
    this.toolbar.appendChild(exportBtn);

    const noticeHost = el("p", "toolbar-notice");
    noticeHost.hidden = true;
    this.toolbar.appendChild(noticeHost);
  }

  private numberInput(name: string, value: number, step: number,
                      onChange: (v: number) => void): HTMLElement {
    const wrap = el("label", "control", `${name} `);
    const input = el("input");
    input.type = "number";
    input.step = String(step);
    input.value = String(value);
    input.name = name;
    input.addEventListener("change", () => onChange(Number(input.value)));
    wrap.appendChild(input);
    return wrap;
  }

  private showToolbarNotice(text: string): void {
    const host = this.toolbar.querySelector<HTMLElement>(".toolbar-notice");
    if (host) {
      host.hidden = false;
      host.textContent = text;
    }
  }

  private persist(): void {
    try {
      window.localStorage.setItem(SESSION_KEY, serializeState(this.state));
    } catch {
      // storage unavailable (tests, private mode); session just not persisted
    }
  }

  selectedRegimes(): number[] {
    if (this.state.pinned.length) return [...this.state.pinned];
    const doc = this.front.lastDoc;
    if (!doc) return [];
    return doc.points.filter((p) => p.nondominated).map((p) => p.regime_id);
  }

  async refreshAll(): Promise<void> {
    await this.front.refresh(this.state);
    const pinned = this.state.pinned[this.state.pinned.length - 1] ?? null;
    await this.envelopes.refresh(this.state, pinned);
    await this.wedge.refresh(this.state, this.selectedRegimes());
  }

  async flip(kpi: string): Promise<void> {
    this.state = flipOrientation(this.state, kpi);
    this.buildToolbar();
    this.persist();
    await this.front.refresh(this.state);
    await this.wedge.refresh(this.state, this.selectedRegimes());
  }

  async pin(regimeId: number): Promise<void> {
    this.state = togglePin(this.state, regimeId);
    this.persist();
    await this.refreshAll();
  }

  async setWindow(changes: Partial<Pick<SessionState, "m" | "level" | "infl">>): Promise<void> {
    this.state = { ...this.state, ...changes };
    this.buildToolbar();
    this.persist();
    const pinned = this.state.pinned[this.state.pinned.length - 1] ?? null;
    await this.envelopes.refresh(this.state, pinned);
  }

  download(): void {
    const csv = shortlistCsv(this.menu, this.state.pinned);
    const blob = new Blob([csv], { type: "text/csv" });
    const a = el("a");
    a.href = URL.createObjectURL(blob);
    a.download = `${this.state.menuId}-shortlist.csv`;
    a.click();
    URL.revokeObjectURL(a.href);
  }
}

export async function main(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "http://127.0.0.1:8321";
  const menuId = params.get("menu") ?? "menu1";
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const api = new ApiClient(base);
  try {
    await ExplorerApp.boot(api, menuId, root, window.localStorage);
  } catch (err) {
    root.appendChild(el("p", "notice", `failed to load menu ${menuId}: ${String(err)}`));
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void main();
}
