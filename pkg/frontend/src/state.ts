/** Session state: pure client navigation settings, serializable round-trip. */

import type { Orientation } from "./types.js";

// default cost-ratio lattice for the coherence heatmap; kept as strings so
// request URLs are byte-stable (the fixture capture script reads these)
export const LAMBDA_GRID = ["0.1", "0.2", "0.5", "1", "2", "5", "10"];
export const RHO_GRID = ["0", "0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8"];

export interface SessionState {
  menuId: string;
  kpis: string[];
  orientation: Orientation;
  xKpi: string;
  yKpi: string;
  colorKpi: string;
  m: number;
  level: number;
  infl: number;
  lambdaGrid: string[];
  rhoGrid: string[];
  cursor: { lambda: string; rho: string } | null;
  pinned: number[];
}

export function defaultState(menuId: string, kpis: string[], orientation: Orientation,
                             m: number, level: number): SessionState {
  const [x, y, color] = [kpis[0], kpis[1] ?? kpis[0], kpis[2] ?? kpis[0]];
  return {
    menuId,
    kpis: [...kpis],
    orientation: { ...orientation },
    xKpi: x,
    yKpi: y,
    colorKpi: color,
    m,
    level,
    infl: 1,
    lambdaGrid: [...LAMBDA_GRID],
    rhoGrid: [...RHO_GRID],
    cursor: null,
    pinned: [],
  };
}

export function flipOrientation(state: SessionState, kpi: string): SessionState {
  if (!(kpi in state.orientation)) throw new Error(`unknown KPI ${kpi}`);
  const sign = state.orientation[kpi] === 1 ? -1 : 1;
  return { ...state, orientation: { ...state.orientation, [kpi]: sign } };
}

export function togglePin(state: SessionState, regimeId: number): SessionState {
  const pinned = state.pinned.includes(regimeId)
    ? state.pinned.filter((r) => r !== regimeId)
    : [...state.pinned, regimeId];
  return { ...state, pinned };
}

export function serializeState(state: SessionState): string {
  return JSON.stringify(state);
}

export function restoreState(raw: string): SessionState {
  const parsed = JSON.parse(raw) as SessionState;
  for (const field of ["menuId", "kpis", "orientation", "m", "level", "infl",
                       "lambdaGrid", "rhoGrid", "pinned"] as const) {
    if (parsed[field] === undefined) throw new Error(`session state missing ${field}`);
  }
  for (const k of parsed.kpis) {
    const sign = parsed.orientation[k];
    if (sign !== 1 && sign !== -1) throw new Error(`orientation for ${k} must be +1 or -1`);
  }
  if (!(parsed.m >= 1)) throw new Error("window m must be >= 1");
  return parsed;
}
