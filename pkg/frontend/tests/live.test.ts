/** End-to-end console contract against a live service process.
 *
 * Spawns the monitoring service, then drives the console modules exactly as
 * the browser wiring does: events are appended to the session log, each one
 * triggers a /decision call, and the dashboard/what-if view models are built
 * from the responses.  Asserts the scripted stop scenario, the what-if stop
 * cell, and that export -> import reproduces the dashboard.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { Window } from "happy-dom";

import { ApiClient, ApiError, feasibleRhoInterval } from "../src/api.js";
import {
  appendEvent,
  countsAt,
  declaredState,
  exportEvents,
  newSession,
  parseEventLog,
  replayThroughService,
  type SessionLog,
} from "../src/state.js";
import type { DecisionResponse, TrialConfigJson } from "../src/types.js";
import {
  buildBoundaryTable,
  buildDashboard,
  buildWhatIf,
  horizonCap,
} from "../src/viewmodel.js";
import { renderDashboard, renderWhatIf } from "../src/ui.js";

const PORT = 8840 + Math.floor(Math.random() * 120);
const BASE = `http://127.0.0.1:${PORT}`;

const CONFIG: TrialConfigJson = {
  theta01: 0.2,
  theta02: 0.2,
  tau: 0.98,
  maxN1: 20,
  maxN2: 20,
  prior: { p1: 0.2, p2: 0.2, ess: 3.0, rho: 0.5 },
  rule: "correlated",
};

let server: ChildProcessWithoutNullStreams;
const api = new ApiClient(BASE);

beforeAll(async () => {
  server = spawn("tox2mon", ["serve", "--bind", `127.0.0.1:${PORT}`]);
  const deadline = Date.now() + 45000;
  for (;;) {
    try {
      const health = await api.health();
      expect(health.service).toBe("tox2mon");
      return;
    } catch {
      if (Date.now() > deadline) {
        throw new Error(`service did not come up on ${BASE}`);
      }
      await new Promise((r) => setTimeout(r, 250));
    }
  }
});

afterAll(() => {
  server.kill();
});

/** Record one outcome the way the controller does: append, then ask the
 * service for the updated verdicts. */
async function record(
  session: SessionLog,
  history: DecisionResponse[],
  cohort: 1 | 2,
  toxic: boolean,
): Promise<SessionLog> {
  const next = appendEvent(session, cohort, toxic);
  history.push(
    await api.decision(next.config, declaredState(next.config, countsAt(next.events))),
  );
  return next;
}

describe("scripted stop scenario", () => {
  it("raises the cohort-1 STOP banner exactly at (6,5,6,0)", async () => {
    let session = newSession(CONFIG);
    const history: DecisionResponse[] = [
      await api.decision(CONFIG, declaredState(CONFIG, countsAt([]))),
    ];
    // prior state: both gauges show the same prior exceedance, no banner
    const prior = buildDashboard(CONFIG, 0, history[0]!);
    expect(prior.banner.raised).toBe(false);
    expect(prior.gauges[0]!.exceedanceText).toBe("0.3841");
    expect(prior.gauges[1]!.exceedanceText).toBe("0.3841");

    // six clean patients in cohort 2, then 0,1,1,1,1,1 toxicities in cohort 1
    const script: [1 | 2, boolean][] = [
      [2, false], [2, false], [2, false], [2, false], [2, false], [2, false],
      [1, false], [1, true], [1, true], [1, true], [1, true], [1, true],
    ];
    for (const [cohort, toxic] of script.slice(0, -1)) {
      session = await record(session, history, cohort, toxic);
      const vm = buildDashboard(CONFIG, session.events.length, history[history.length - 1]!);
      expect(vm.banner.raised).toBe(false);
      expect(vm.canRecord[1]).toBe(true);
    }
    const last = script[script.length - 1]!;
    session = await record(session, history, last[0], last[1]);

    expect(countsAt(session.events)).toEqual({ n1: 6, k1: 5, n2: 6, k2: 0 });
    const final = history[history.length - 1]!;
    const vm = buildDashboard(CONFIG, session.events.length, final);
    expect(vm.banner.raised).toBe(true);
    expect(vm.banner.text).toContain("cohort 1");
    expect(vm.gauges[0]!.statusLabel).toBe("stopped (toxicity)");
    expect(vm.gauges[0]!.frozen).toBe(true);
    expect(vm.canRecord[1]).toBe(false);
    expect(vm.canRecord[2]).toBe(true);
    // the verdict comes from the correlated rule (the active one)
    const correlated = final.ruleComparison.correlated.find((p) => p.cohort === 1)!;
    expect(correlated.stop).toBe(true);
    expect(vm.gauges[0]!.exceedanceText).toBe("0.9943");

    // the rendered DOM shows the banner
    const win = new Window();
    const doc = win.document as unknown as Document;
    const root = doc.createElement("div");
    renderDashboard(doc, root, vm, {
      onRecord: () => undefined,
      onUndo: () => undefined,
      onExport: () => undefined,
      onImportText: () => undefined,
      onNewSession: () => undefined,
    });
    const banner = root.querySelector(".stop-banner")!;
    expect(banner.classList.contains("hidden")).toBe(false);
    expect(banner.textContent).toContain("STOP");

    // export -> import reproduces the dashboard exactly
    const text = exportEvents(session);
    const imported = parseEventLog(text);
    const replayed = await replayThroughService(api, CONFIG, imported);
    expect(replayed).toHaveLength(history.length);
    const reVm = buildDashboard(CONFIG, imported.length, replayed[replayed.length - 1]!);
    expect(reVm).toEqual(vm);
  }, 60000);

  it("undoing the stopping event restores the previous decision exactly", async () => {
    let session = newSession(CONFIG);
    const history: DecisionResponse[] = [
      await api.decision(CONFIG, declaredState(CONFIG, countsAt([]))),
    ];
    for (const [cohort, toxic] of [
      [2, false], [2, false], [2, false], [2, false], [2, false],
      [1, false], [1, true], [1, true], [1, true],
    ] as [1 | 2, boolean][]) {
      session = await record(session, history, cohort, toxic);
    }
    // (4,3,5,0) is still active; the next toxicity reaches (5,4,5,0), which
    // crosses the threshold
    const before = buildDashboard(CONFIG, session.events.length, history[history.length - 1]!);
    expect(before.banner.raised).toBe(false);
    session = await record(session, history, 1, true);
    expect(
      buildDashboard(CONFIG, session.events.length, history[history.length - 1]!)
        .banner.raised,
    ).toBe(true);
    // undo = drop the event and its decision; the previous render returns
    session = { ...session, events: session.events.slice(0, -1) };
    history.pop();
    const after = buildDashboard(CONFIG, session.events.length, history[history.length - 1]!);
    expect(after).toEqual(before);
    expect(after.banner.raised).toBe(false);
  }, 60000);
});

describe("what-if projection", () => {
  it("colors cell (1,0) as stop at horizon 1 from (5,4,5,0)", async () => {
    // a log that lands exactly on (5,4,5,0): five clean cohort-2 patients,
    // then 0,1,1,1,1 toxicities in cohort 1 (the stop fires at the final
    // event, so the log replays cleanly)
    const events = parseEventLog(
      JSON.stringify([
        { seq: 1, cohort: 2, toxic: false },
        { seq: 2, cohort: 2, toxic: false },
        { seq: 3, cohort: 2, toxic: false },
        { seq: 4, cohort: 2, toxic: false },
        { seq: 5, cohort: 2, toxic: false },
        { seq: 6, cohort: 1, toxic: false },
        { seq: 7, cohort: 1, toxic: true },
        { seq: 8, cohort: 1, toxic: true },
        { seq: 9, cohort: 1, toxic: true },
        { seq: 10, cohort: 1, toxic: true },
      ]),
    );
    const history = await replayThroughService(api, CONFIG, events);
    const counts = countsAt(events);
    expect(counts).toEqual({ n1: 5, k1: 4, n2: 5, k2: 0 });

    const response = await api.whatif(CONFIG, declaredState(CONFIG, counts), 1);
    const vm = buildWhatIf(response);
    expect(vm.rows).toHaveLength(2);
    expect(vm.rows[0]).toHaveLength(2);
    const cell10 = vm.rows[1]![0]!;
    expect(cell10.j1).toBe(1);
    expect(cell10.j2).toBe(0);
    expect(cell10.stop).toBe(true);
    expect(vm.rows[0]![0]!.stop).toBe(false);

    // and the grid renders that cell with the stop color
    const win = new Window();
    const doc = win.document as unknown as Document;
    const root = doc.createElement("div");
    const cap = horizonCap(CONFIG, counts, { 1: true, 2: true });
    expect(cap).toBe(15);
    renderWhatIf(doc, root, vm, cap, () => undefined, () => undefined);
    const td = root.querySelector('td[data-j1="1"][data-j2="0"]')!;
    expect(td.classList.contains("cell-stop")).toBe(true);
    expect(
      root.querySelector('td[data-j1="0"][data-j2="0"]')!.classList.contains("cell-continue"),
    ).toBe(true);

    // horizon 0 reproduces the current decision (the projection carries no
    // boundary column, so compare the shared fields)
    const h0 = await api.whatif(CONFIG, declaredState(CONFIG, counts), 0);
    expect(h0.cells).toHaveLength(1);
    const current = history[history.length - 1]!.perCohort.map(
      ({ cohort, n, k, status, exceedance, stop }) =>
        ({ cohort, n, k, status, exceedance, stop }),
    );
    expect(h0.cells[0]!.perCohort).toEqual(current);
  }, 60000);

  it("rejects a horizon beyond the remaining capacity", async () => {
    const err = await api
      .whatif(CONFIG, declaredState(CONFIG, { n1: 0, k1: 0, n2: 0, k2: 0 }), 21)
      .then(
        () => null,
        (e: unknown) => e,
      );
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(422);
    expect((err as ApiError).code).toBe("invalid_horizon");
  });
});

describe("other service-backed views", () => {
  it("renders the published boundary row for the reference design", async () => {
    const table = await api.boundaryTable(CONFIG, 10);
    const vm = buildBoundaryTable(table);
    expect(vm.rows[0]!.k2).toBe(0);
    expect(vm.rows[0]!.cells.map((c) => c.text)).toEqual([
      "·", "·", "·", "4", "4", "5", "5", "6", "6", "6",
    ]);
  });

  it("surfaces the feasible interval for an infeasible correlation", async () => {
    const bad: TrialConfigJson = {
      ...CONFIG,
      prior: { p1: 0.2, p2: 0.2, ess: 3.0, rho: -0.7 },
    };
    const err = await api
      .decision(bad, declaredState(bad, { n1: 0, k1: 0, n2: 0, k2: 0 }))
      .then(
        () => null,
        (e: unknown) => e,
      );
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).code).toBe("infeasible_prior");
    expect(feasibleRhoInterval(err as ApiError)).toEqual([-0.25, 1.0]);
  });

  it("rejects an import that keeps enrolling after a stop", async () => {
    const events = parseEventLog(
      JSON.stringify(
        [true, true, true, false].map((toxic, i) => ({
          seq: i + 1,
          cohort: 1,
          toxic,
        })),
      ),
    );
    // three straight toxicities stop cohort 1, so the fourth cohort-1
    // patient violates the protocol
    await expect(replayThroughService(api, CONFIG, events)).rejects.toThrow(
      /after it stopped/,
    );
  }, 60000);
});
