/** Coherence heatmap over the (lambda, rho) cost-ratio lattice.
 *
 * Each cell shows the fraction of selected regimes (pinned, else the whole
 * front) whose commit-on-singletons wiring is coherent at that lattice
 * point; union and intersection outlines mark where any / all regimes are
 * coherent. Hovering a cell fetches the exact per-region verdicts for the
 * first selected regime and lists the failing regions. */

import { ApiClient, ApiError, LatestGate, coherenceGridPath, coherencePointPath } from "../api.js";
import { clear, el, fmtFloat } from "../dom.js";
import type { SessionState } from "../state.js";
import type { CoherenceGrid, CoherencePoint } from "../types.js";

export class WedgeView {
  readonly root: HTMLElement;
  lastGrids: CoherenceGrid[] = [];
  lastPaths: string[] = [];
  lastReadout: CoherencePoint | null = null;
  private readonly gate = new LatestGate();
  private readonly hoverGate = new LatestGate();
  private readonly notice: HTMLElement;
  private readonly body: HTMLElement;
  private readonly readout: HTMLElement;
  private regimeIds: number[] = [];

  constructor(private readonly api: ApiClient) {
    this.root = el("section", "wedge-view");
    this.root.appendChild(el("h2", undefined, "Cost-coherence"));
    this.notice = el("p", "notice");
    this.notice.hidden = true;
    this.body = el("div", "wedge-body");
    this.readout = el("div", "wedge-readout");
    this.root.appendChild(this.notice);
    this.root.appendChild(this.body);
    this.root.appendChild(this.readout);
  }

  paths(state: SessionState, regimeIds: number[]): string[] {
    return regimeIds.map((rid) =>
      coherenceGridPath(state.menuId, rid, state.lambdaGrid, state.rhoGrid));
  }

  async refresh(state: SessionState, regimeIds: number[]): Promise<void> {
    const token = this.gate.next();
    if (regimeIds.length === 0) {
      if (this.gate.accept(token)) {
        clear(this.body);
        this.body.appendChild(el("p", "empty", "no regimes selected"));
      }
      return;
    }
    const paths = this.paths(state, regimeIds);
    try {
      const grids = await Promise.all(paths.map((p) => this.api.json<CoherenceGrid>(p)));
      if (!this.gate.accept(token)) return;
      this.lastGrids = grids;
      this.lastPaths = paths;
      this.regimeIds = [...regimeIds];
      this.notice.hidden = true;
      this.render(state, grids);
    } catch (err) {
      if (!this.gate.accept(token)) return;
      this.notice.hidden = false;
      this.notice.textContent =
        err instanceof ApiError ? `service error ${err.status}: ${err.message}` : String(err);
    }
  }

  private render(state: SessionState, grids: CoherenceGrid[]): void {
    clear(this.body);
    const nLam = state.lambdaGrid.length;
    const nRho = state.rhoGrid.length;
    const table = el("table", "wedge-grid");
    const head = el("tr");
    head.appendChild(el("th", undefined, "rho \\ lambda"));
    for (const lam of state.lambdaGrid) head.appendChild(el("th", undefined, lam));
    table.appendChild(head);
    for (let j = nRho - 1; j >= 0; j--) {
      const row = el("tr");
      row.appendChild(el("th", undefined, state.rhoGrid[j]));
      for (let i = 0; i < nLam; i++) {
        const inAll = grids.every((g) => g.intersection[i][j] === 1);
        const inAny = grids.some((g) => g.intersection[i][j] === 1);
        const fraction =
          grids.reduce((acc, g) => acc + g.intersection[i][j], 0) / grids.length;
        const cell = el("td", "cell");
        cell.dataset.lambda = state.lambdaGrid[i];
        cell.dataset.rho = state.rhoGrid[j];
        cell.dataset.fraction = String(fraction);
        if (inAll) cell.classList.add("outline-intersection");
        if (inAny) cell.classList.add("outline-union");
        cell.style.background = `hsl(145 60% ${95 - 55 * fraction}%)`;
        cell.title = `lambda=${state.lambdaGrid[i]} rho=${state.rhoGrid[j]} coherent ${String(fraction)}`;
        cell.addEventListener("mouseenter", () => {
          void this.hover(state, state.lambdaGrid[i], state.rhoGrid[j]);
        });
        row.appendChild(cell);
      }
      table.appendChild(row);
    }
    this.body.appendChild(table);
  }

  async hover(state: SessionState, lam: string, rho: string): Promise<void> {
    if (this.regimeIds.length === 0) return;
    const token = this.hoverGate.next();
    const path = coherencePointPath(state.menuId, this.regimeIds[0], lam, rho);
    try {
      const doc = await this.api.json<CoherencePoint>(path);
      if (!this.hoverGate.accept(token)) return;
      this.lastReadout = doc;
      this.renderReadout(doc);
    } catch (err) {
      if (!this.hoverGate.accept(token)) return;
      this.readout.textContent =
        err instanceof ApiError ? `service error ${err.status}: ${err.message}` : String(err);
    }
  }

  private renderReadout(doc: CoherencePoint): void {
    clear(this.readout);
    const headline = doc.coherent
      ? `regime ${doc.regime_id} coherent at lambda=${fmtFloat(doc.lambda)} rho=${fmtFloat(doc.rho)}`
      : `regime ${doc.regime_id} incoherent at lambda=${fmtFloat(doc.lambda)} rho=${fmtFloat(doc.rho)}`;
    this.readout.appendChild(el("p", "readout-head", headline));
    if (doc.rejection_band_violated) {
      this.readout.appendChild(el(
        "p", "readout-band",
        "rejection band empty here: rho exceeds lambda/(1+lambda)",
      ));
    }
    const list = el("ul", "readout-regions");
    for (const v of doc.regions) {
      if (!v.occupied || v.coherent) continue;
      const item = el(
        "li", "failing",
        `${v.region}: ${v.action} not risk-minimizing at eta=${v.eta === null ? "-" : fmtFloat(v.eta)}`,
      );
      item.dataset.region = v.region;
      list.appendChild(item);
    }
    if (!list.firstChild) {
      list.appendChild(el("li", "ok", "all occupied regions coherent"));
    }
    this.readout.appendChild(list);
  }
}
