/** Shortlist export in the menu CSV schema (same columns as the server's file). */

import { fmtFloat, fmtNum } from "../dom.js";
import type { MenuDoc, MenuPoint } from "../types.js";
import { OUTCOME_KPIS } from "../types.js";

export function menuColumns(): string[] {
  const cols = [
    "regime_id", "multiplicity",
    "alpha0", "delta0", "alpha1", "delta1",
    "alpha_ssbc_0", "alpha_ssbc_1",
    "u0", "u1", "tau0", "tau1", "regime",
  ];
  for (const kpi of OUTCOME_KPIS) cols.push(`${kpi}_rate`, `${kpi}_lo`, `${kpi}_hi`);
  cols.push("nondominated");
  return cols;
}

function row(point: MenuPoint): string[] {
  const cells = [
    fmtNum(point.regime_id), fmtNum(point.multiplicity),
    fmtFloat(point.request.alpha0), fmtFloat(point.request.delta0),
    fmtFloat(point.request.alpha1), fmtFloat(point.request.delta1),
    fmtFloat(point.alpha_ssbc_0), fmtFloat(point.alpha_ssbc_1),
    fmtNum(point.u0), fmtNum(point.u1),
    fmtFloat(point.tau0), fmtFloat(point.tau1),
    point.regime,
  ];
  for (const kpi of OUTCOME_KPIS) {
    const env = point.envelopes[kpi];
    cells.push(fmtFloat(point.rates[kpi]), fmtNum(env.lo), fmtNum(env.hi));
  }
  cells.push(point.nondominated ? "true" : "false");
  return cells;
}

/** CSV of the pinned shortlist (all regimes when nothing is pinned). */
export function shortlistCsv(menu: MenuDoc, pinned: number[]): string {
  const selected = pinned.length
    ? menu.points.filter((p) => pinned.includes(p.regime_id))
    : menu.points;
  const lines = [menuColumns().join(",")];
  for (const p of [...selected].sort((a, b) => a.regime_id - b.regime_id)) {
    lines.push(row(p).join(","));
  }
  return lines.join("\r\n") + "\r\n";
}
