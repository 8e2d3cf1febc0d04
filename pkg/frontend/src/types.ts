/** Payload shapes of the coverplan service JSON API. */

export const OUTCOME_KPIS = [
  "correct0", "waste", "hedge0", "correct1", "loss", "hedge1",
] as const;

export type Orientation = Record<string, 1 | -1>;

export interface DatasetInfo {
  dataset_id: string;
  rows: number;
  prob_normalized: boolean;
  provenance: { source: string; filter: string | null; rows_in: number; rows_kept: number };
}

export interface EnvelopeDoc {
  m: number;
  point: number;
  lo: number;
  hi: number;
  level: number;
  source: string;
  infl: number;
}

export interface MenuPoint {
  regime_id: number;
  multiplicity: number;
  request: { alpha0: number; delta0: number; alpha1: number; delta1: number };
  u0: number;
  u1: number;
  alpha_ssbc_0: number;
  alpha_ssbc_1: number;
  tau0: number;
  tau1: number;
  regime: string;
  n_table: number;
  counts: Record<string, number>;
  rates: Record<string, number>;
  envelopes: Record<string, EnvelopeDoc>;
  nondominated: boolean;
}

export interface MenuDoc {
  menu_id: string;
  kpis: string[];
  orientation: Orientation;
  m: number;
  level: number;
  infl: number;
  mode: string;
  points: MenuPoint[];
}

export interface FrontDoc {
  menu_id: string;
  kpis: string[];
  orientation: Orientation;
  points: MenuPoint[];
}

export interface RegimeEnvelopes {
  menu_id: string;
  regime_id: number;
  m: number;
  level: number;
  infl: number;
  rates: Record<string, number>;
  envelopes: Record<string, EnvelopeDoc>;
}

export interface RegionVerdict {
  region: string;
  action: string;
  occupied: boolean;
  coherent: boolean;
  eta: number | null;
  risks: number[] | null;
}

export interface CoherencePoint {
  menu_id: string;
  regime_id: number;
  lambda: number;
  rho: number;
  coherent: boolean;
  expected_cost: number;
  rejection_band_violated: boolean;
  regions: RegionVerdict[];
}

export interface CoherenceGrid {
  menu_id: string;
  regime_id: number;
  lam_grid: number[];
  rho_grid: number[];
  intersection: number[][];
  union: number[][];
  rejection_band_violated: number[][];
}

export interface JobDoc {
  job_id: string;
  status: "queued" | "running" | "done" | "failed";
  menu_id: string;
  error?: string;
}
