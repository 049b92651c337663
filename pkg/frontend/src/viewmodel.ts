/** Pure view-model builders.
 *
 * Every number in a view model is copied from a service response and only
 * formatted for display.  Stop/continue badges are driven by the service's
 * boolean verdicts alone; the console never compares a probability against
 * tau itself, so display rounding can never disagree with the decision.
 */

import type {
  BoundaryTableResponse,
  CohortDecision,
  DecisionResponse,
  Rule,
  TrialConfigJson,
  WhatIfResponse,
} from "./types.js";
import { RULES } from "./types.js";
import type { Counts } from "./state.js";

export function formatProbability(p: number): string {
  return p.toFixed(4);
}

export interface GaugeVM {
  cohort: 1 | 2;
  n: number;
  k: number;
  cap: number;
  exceedanceText: string;
  /** Service verdict, verbatim. */
  stop: boolean;
  statusLabel: "active" | "stopped (toxicity)" | "completed";
  /** Stopped cohorts are rendered frozen at their recorded (n, k). */
  frozen: boolean;
  boundaryText: string;
}

export interface ComparisonRowVM {
  rule: Rule;
  activeRule: boolean;
  cells: { cohort: 1 | 2; exceedanceText: string; stop: boolean }[];
}

export interface DashboardVM {
  banner: { raised: boolean; text: string };
  gauges: GaugeVM[];
  comparison: ComparisonRowVM[];
  canRecord: { 1: boolean; 2: boolean };
  canUndo: boolean;
  eventCount: number;
}

function cohortVerdict(
  response: DecisionResponse,
  cohort: 1 | 2,
): CohortDecision {
  const found = response.perCohort.find((p) => p.cohort === cohort);
  if (!found) {
    throw new Error(`service response is missing cohort ${cohort}`);
  }
  return found;
}

function gauge(
  config: TrialConfigJson,
  verdict: CohortDecision,
  cohort: 1 | 2,
): GaugeVM {
  const cap = cohort === 1 ? config.maxN1 : config.maxN2;
  const statusLabel = verdict.stop
    ? "stopped (toxicity)"
    : verdict.n >= cap
      ? "completed"
      : "active";
  const boundaryK = verdict.boundaryK;
  return {
    cohort,
    n: verdict.n,
    k: verdict.k,
    cap,
    exceedanceText: formatProbability(verdict.exceedance),
    stop: verdict.stop,
    statusLabel,
    frozen: verdict.stop,
    boundaryText:
      boundaryK === null || boundaryK === undefined
        ? "no stopping count at this enrolment"
        : `stops at ${boundaryK}+ events`,
  };
}

export function buildDashboard(
  config: TrialConfigJson,
  eventCount: number,
  response: DecisionResponse,
): DashboardVM {
  const gauges: GaugeVM[] = [1, 2].map((c) =>
    gauge(config, cohortVerdict(response, c as 1 | 2), c as 1 | 2),
  );
  const stopped = gauges.filter((g) => g.stop).map((g) => `cohort ${g.cohort}`);
  const comparison: ComparisonRowVM[] = RULES.map((rule) => ({
    rule,
    activeRule: rule === config.rule,
    cells: (response.ruleComparison[rule] ?? []).map((cell) => ({
      cohort: cell.cohort,
      exceedanceText: formatProbability(cell.exceedance),
      stop: cell.stop,
    })),
  }));
  const canRecord = {
    1: !gauges[0]!.stop && gauges[0]!.n < config.maxN1,
    2: !gauges[1]!.stop && gauges[1]!.n < config.maxN2,
  };
  return {
    banner: {
      raised: stopped.length > 0,
      text:
        stopped.length > 0
          ? `STOP: excessive toxicity in ${stopped.join(" and ")}`
          : "",
    },
    gauges,
    comparison,
    canRecord,
    canUndo: eventCount > 0,
    eventCount,
  };
}

export interface WhatIfCellVM {
  j1: number;
  j2: number;
  /** True when any cohort's projected verdict is stop. */
  stop: boolean;
  detailLines: string[];
}

export interface WhatIfVM {
  horizon: number;
  /** rows[j1][j2]; a single row when only cohort 2 is active, etc. */
  rows: WhatIfCellVM[][];
}

/** Largest horizon the slider may offer: the tightest remaining capacity
 * among cohorts that are still enrollable. Zero when none are. */
export function horizonCap(
  config: TrialConfigJson,
  counts: Counts,
  enrollable: { 1: boolean; 2: boolean },
): number {
  const remaining: number[] = [];
  if (enrollable[1]) remaining.push(config.maxN1 - counts.n1);
  if (enrollable[2]) remaining.push(config.maxN2 - counts.n2);
  if (remaining.length === 0) return 0;
  return Math.max(0, Math.min(...remaining));
}

export function buildWhatIf(response: WhatIfResponse): WhatIfVM {
  const j1s = [...new Set(response.cells.map((c) => c.j1))].sort(
    (a, b) => a - b,
  );
  const j2s = [...new Set(response.cells.map((c) => c.j2))].sort(
    (a, b) => a - b,
  );
  const rows: WhatIfCellVM[][] = j1s.map((j1) =>
    j2s.map((j2) => {
      const cell = response.cells.find((c) => c.j1 === j1 && c.j2 === j2);
      if (!cell) {
        throw new Error(`service what-if grid is missing cell (${j1}, ${j2})`);
      }
      return {
        j1,
        j2,
        stop: cell.perCohort.some((p) => p.stop),
        detailLines: cell.perCohort.map(
          (p) =>
            `cohort ${p.cohort}: n=${p.n}, k=${p.k}, ` +
            `P(theta > theta0 | data) = ${formatProbability(p.exceedance)}` +
            (p.stop ? " (stop)" : ""),
        ),
      };
    }),
  );
  return { horizon: response.horizon, rows };
}

export interface BoundaryTableVM {
  rule: Rule;
  nMax: number;
  header: string[];
  rows: { k2: number; cells: { text: string; kind: "count" | "none" | "na" }[] }[];
}

export function buildBoundaryTable(
  response: BoundaryTableResponse,
): BoundaryTableVM {
  return {
    rule: response.rule,
    nMax: response.nMax,
    header: Array.from({ length: response.nMax }, (_, i) => `n=${i + 1}`),
    rows: response.rows.map((row) => ({
      k2: row.k2,
      cells: row.cells.map((cell) =>
        cell === "none"
          ? { text: "·", kind: "none" as const }
          : cell === "na"
            ? { text: "", kind: "na" as const }
            : { text: String(cell), kind: "count" as const },
      ),
    })),
  };
}

export interface SetupDraft {
  p1: string;
  p2: string;
  ess: string;
  rho: string;
  theta01: string;
  theta02: string;
  tau: string;
  maxN1: string;
  maxN2: string;
  rule: Rule;
}

export interface SetupValidation {
  config: TrialConfigJson | null;
  errors: Partial<Record<keyof SetupDraft, string>>;
}

/** Client-side mirror of the service's configuration rules.  The feasible
 * correlation interval is NOT checked here: that is the service's call,
 * surfaced from its 422 payload. */
export function validateSetup(draft: SetupDraft): SetupValidation {
  const errors: SetupValidation["errors"] = {};
  const num = (field: keyof SetupDraft): number | null => {
    const text = draft[field].trim();
    if (text === "") {
      errors[field] = "required";
      return null;
    }
    const v = Number(text);
    if (!Number.isFinite(v)) {
      errors[field] = "must be a number";
      return null;
    }
    return v;
  };
  const openUnit = (field: keyof SetupDraft): number | null => {
    const v = num(field);
    if (v === null) return null;
    if (!(v > 0 && v < 1)) {
      errors[field] = "must lie strictly between 0 and 1";
      return null;
    }
    return v;
  };
  const positiveInt = (field: keyof SetupDraft): number | null => {
    const v = num(field);
    if (v === null) return null;
    if (!Number.isInteger(v) || v < 1) {
      errors[field] = "must be a positive integer";
      return null;
    }
    return v;
  };

  const p1 = openUnit("p1");
  const p2 = openUnit("p2");
  const ess = num("ess");
  if (ess !== null && !(ess > 0)) errors.ess = "must be positive";
  const rho = num("rho");
  if (rho !== null && !(rho >= -1 && rho <= 1)) {
    errors.rho = "must lie in [-1, 1]";
  }
  const theta01 = openUnit("theta01");
  const theta02 = openUnit("theta02");
  const tau = num("tau");
  if (tau !== null && !(tau >= 0.5 && tau < 1)) {
    errors.tau = "must lie in [0.5, 1)";
  }
  const maxN1 = positiveInt("maxN1");
  const maxN2 = positiveInt("maxN2");

  if (Object.keys(errors).length > 0) return { config: null, errors };
  return {
    config: {
      theta01: theta01!,
      theta02: theta02!,
      tau: tau!,
      maxN1: maxN1!,
      maxN2: maxN2!,
      prior: { p1: p1!, p2: p2!, ess: ess!, rho: rho! },
      rule: draft.rule,
    },
    errors,
  };
}
