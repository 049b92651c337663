/** JSON shapes exchanged with the monitoring service (/api/v1). */

export type Rule = "correlated" | "independent" | "pooled";

export const RULES: readonly Rule[] = ["correlated", "independent", "pooled"];

export interface PriorElicitationJson {
  p1: number;
  p2: number;
  ess: number;
  rho: number;
}

export interface AlphaJson {
  a11: number;
  a10: number;
  a01: number;
  a00: number;
}

export type PriorJson = PriorElicitationJson | { alpha: AlphaJson };

export interface TrialConfigJson {
  theta01: number;
  theta02: number;
  tau: number;
  maxN1: number;
  maxN2: number;
  prior: PriorJson;
  rule: Rule;
}

/** One row of the shared event-log schema (also used by the CLI). */
export interface EventRecord {
  seq: number;
  cohort: 1 | 2;
  toxic: boolean;
}

/** Trial state as the service expects it: flat counts plus statuses. */
export interface StateBody {
  n1: number;
  k1: number;
  n2: number;
  k2: number;
  status1: string;
  status2: string;
}

export interface CohortDecision {
  cohort: 1 | 2;
  n: number;
  k: number;
  status: string;
  exceedance: number;
  stop: boolean;
  boundaryK?: number | null;
}

export interface DecisionResponse {
  perCohort: CohortDecision[];
  ruleComparison: Record<Rule, CohortDecision[]>;
}

export interface WhatIfCell {
  j1: number;
  j2: number;
  perCohort: CohortDecision[];
}

export interface WhatIfResponse {
  horizon: number;
  cells: WhatIfCell[];
}

export type BoundaryCell = number | "none" | "na";

export interface BoundaryTableResponse {
  rule: Rule;
  nMax: number;
  rows: { k2: number; cells: BoundaryCell[] }[];
}

export interface OCResultJson {
  theta1: number;
  theta2: number;
  stopProb1: number;
  stopProb2: number;
  expectedEnrolled1: number;
  expectedEnrolled2: number;
  expectedEventsTotal: number;
  expectedEventsAtEarlyStop1: number | null;
  expectedEventsAtEarlyStop2: number | null;
}

export interface OCResponse {
  rule: Rule;
  results: OCResultJson[];
}

export interface CalibrateResponse {
  tau: number;
  achievedAlpha: number;
  targetAlpha: number;
}

export interface HealthResponse {
  status: string;
  service: string;
  version: string;
}

/** Flat machine-readable error body returned on every non-2xx response. */
export interface ApiErrorBody {
  code: string;
  message: string;
  details?: Record<string, unknown>;
}
