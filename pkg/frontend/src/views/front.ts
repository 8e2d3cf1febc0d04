/** Pareto front scatter: two KPIs on the axes, a third as color, rings on
 * the nondominated set. Clicking a point pins its regime. */

import { ApiClient, ApiError, LatestGate, frontPath } from "../api.js";
import { clear, el, fmtFloat, svgEl } from "../dom.js";
import type { SessionState } from "../state.js";
import type { FrontDoc, MenuPoint } from "../types.js";

const WIDTH = 520;
const HEIGHT = 360;
const PAD = 40;

function scale(values: number[], lo: number, hi: number): (v: number) => number {
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min || 1;
  return (v) => lo + ((v - min) / span) * (hi - lo);
}

export class FrontView {
  readonly root: HTMLElement;
  lastDoc: FrontDoc | null = null;
  lastPath: string | null = null;
  private readonly gate = new LatestGate();
  private readonly notice: HTMLElement;
  private readonly plot: HTMLElement;

  constructor(
    private readonly api: ApiClient,
    private readonly onPin: (regimeId: number) => void,
  ) {
    this.root = el("section", "front-view");
    this.root.appendChild(el("h2", undefined, "Operating regimes"));
    this.notice = el("p", "notice");
    this.notice.hidden = true;
    this.plot = el("div", "front-plot");
    this.root.appendChild(this.notice);
    this.root.appendChild(this.plot);
  }

  path(state: SessionState): string {
    return frontPath(state.menuId, state.kpis, state.orientation);
  }

  async refresh(state: SessionState): Promise<void> {
    const token = this.gate.next();
    const path = this.path(state);
    try {
      const doc = await this.api.json<FrontDoc>(path);
      if (!this.gate.accept(token)) return;
      this.lastDoc = doc;
      this.lastPath = path;
      this.notice.hidden = true;
      this.render(doc, state);
    } catch (err) {
      if (!this.gate.accept(token)) return;
      this.showNotice(err);
    }
  }

  private showNotice(err: unknown): void {
    this.notice.hidden = false;
    this.notice.textContent =
      err instanceof ApiError ? `service error ${err.status}: ${err.message}` : String(err);
  }

  private render(doc: FrontDoc, state: SessionState): void {
    clear(this.plot);
    const svg = svgEl("svg", {
      viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
      width: String(WIDTH),
      height: String(HEIGHT),
      role: "img",
    });
    const points = doc.points;
    if (points.length === 0) {
      this.plot.appendChild(el("p", "empty", "menu has no operating points"));
      return;
    }
    const xs = points.map((p) => p.rates[state.xKpi]);
    const ys = points.map((p) => p.rates[state.yKpi]);
    const colors = points.map((p) => p.rates[state.colorKpi]);
    const sx = scale(xs, PAD, WIDTH - PAD);
    const sy = scale(ys, HEIGHT - PAD, PAD);
    const cmax = Math.max(...colors, 1e-12);
    svg.appendChild(svgEl("text", { x: String(WIDTH / 2), y: String(HEIGHT - 6), class: "axis" }))
      .textContent = state.xKpi;
    svg.appendChild(svgEl("text", {
      x: "12", y: String(HEIGHT / 2), class: "axis",
      transform: `rotate(-90 12 ${HEIGHT / 2})`,
    })).textContent = state.yKpi;
    for (const p of points) {
      const hue = 210 - 170 * (p.rates[state.colorKpi] / cmax);
      const dot = svgEl("circle", {
        cx: String(sx(p.rates[state.xKpi])),
        cy: String(sy(p.rates[state.yKpi])),
        r: p.nondominated ? "7" : "4",
        fill: `hsl(${hue} 70% 50%)`,
        class: this.pointClass(p, state),
        "data-regime-id": String(p.regime_id),
        "data-x": fmtFloat(p.rates[state.xKpi]),
        "data-y": fmtFloat(p.rates[state.yKpi]),
        "data-color": fmtFloat(p.rates[state.colorKpi]),
        "data-nondominated": String(p.nondominated),
      });
      const label = svgEl("title");
      label.textContent =
        `${p.regime_id}:${p.multiplicity} ` +
        `${state.xKpi}=${fmtFloat(p.rates[state.xKpi])} ` +
        `${state.yKpi}=${fmtFloat(p.rates[state.yKpi])} ` +
        `${state.colorKpi}=${fmtFloat(p.rates[state.colorKpi])}`;
      dot.appendChild(label);
      dot.addEventListener("click", () => this.onPin(p.regime_id));
      svg.appendChild(dot);
    }
    this.plot.appendChild(svg);
  }

  private pointClass(p: MenuPoint, state: SessionState): string {
    const classes = ["point"];
    if (p.nondominated) classes.push("nondominated");
    if (state.pinned.includes(p.regime_id)) classes.push("pinned");
    return classes.join(" ");
  }
}
