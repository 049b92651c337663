/** Full-stack drive of the application wiring.
 *
 * bootstrap() is booted inside a happy-dom window whose origin points at a
 * live service process, and every interaction goes through the rendered DOM:
 * the setup form is submitted, outcomes are recorded by clicking the real
 * buttons, the what-if horizon is moved via the slider, and a reload is
 * simulated by booting a second window from the same localStorage payload.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { Window as HappyWindow } from "happy-dom";

import { bootstrap } from "../src/main.js";
import { STORAGE_KEY } from "../src/state.js";

const PORT = 8960 + Math.floor(Math.random() * 40);
const BASE = `http://127.0.0.1:${PORT}`;

type DomWindow = Window & typeof globalThis & { Event: typeof Event };

let server: ChildProcessWithoutNullStreams;
const openWindows: HappyWindow[] = [];

beforeAll(async () => {
  server = spawn("tox2mon", ["serve", "--bind", `127.0.0.1:${PORT}`]);
  const deadline = Date.now() + 45000;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/api/v1/health`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error(`service did not come up on ${BASE}`);
    await new Promise((r) => setTimeout(r, 250));
  }
});

afterAll(async () => {
  for (const w of openWindows) {
    await w.happyDOM.close();
  }
  server.kill();
});

/** Boot a fresh console window pointed at the live service. */
function openConsole(): { win: DomWindow; doc: Document; raw: HappyWindow } {
  const raw = new HappyWindow({ url: `${BASE}/` });
  openWindows.push(raw);
  const win = raw as unknown as DomWindow;
  const doc = win.document;
  doc.body.innerHTML = '<div id="app"></div>';
  bootstrap(win);
  return { win, doc, raw };
}

/** Poll until the probe yields a truthy value; renders are asynchronous. */
async function until<T>(
  probe: () => T | null | undefined | false,
  what: string,
  timeoutMs = 20000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = probe();
    if (value) return value;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 25));
  }
}

async function submitSetup(win: DomWindow, doc: Document): Promise<void> {
  const form = await until(() => doc.querySelector("form.setup"), "setup form");
  form.dispatchEvent(new win.Event("submit", { bubbles: true, cancelable: true }));
  await until(() => doc.querySelector("section.gauge"), "dashboard");
}

function recordButton(doc: Document, cohort: 1 | 2, toxic: boolean): HTMLButtonElement {
  const btn = doc.querySelector<HTMLButtonElement>(
    `button.record[data-cohort="${cohort}"][data-toxic="${toxic}"]`,
  );
  if (!btn) throw new Error(`no record button for cohort ${cohort} toxic=${toxic}`);
  return btn;
}

function gaugeCounts(doc: Document, cohort: 1 | 2): string | null {
  const p = doc.querySelector(`section.gauge[data-cohort="${cohort}"] .gauge-counts`);
  return p ? p.textContent : null;
}

/** Click a record button and wait for the gauge to show the new counts. */
async function clickAndSettle(
  doc: Document,
  cohort: 1 | 2,
  toxic: boolean,
  expectCounts: string,
): Promise<void> {
  const btn = recordButton(doc, cohort, toxic);
  expect(btn.disabled).toBe(false);
  btn.click();
  await until(
    () => gaugeCounts(doc, cohort) === expectCounts,
    `cohort ${cohort} gauge to read "${expectCounts}"`,
  );
}

function visibleBanner(doc: Document): Element | null {
  const banner = doc.querySelector(".stop-banner");
  return banner && !banner.classList.contains("hidden") ? banner : null;
}

describe("bootstrap against a live service", () => {
  it("boots into the setup form and starts a session with the defaults", async () => {
    const { win, doc } = openConsole();
    const form = await until(() => doc.querySelector("form.setup"), "setup form");
    expect(
      form.querySelector<HTMLInputElement>('input[name="tau"]')!.value,
    ).toBe("0.98");
    expect(
      form.querySelector<HTMLButtonElement>("button.start")!.disabled,
    ).toBe(false);

    await submitSetup(win, doc);
    const gauges = doc.querySelectorAll("section.gauge");
    expect(gauges).toHaveLength(2);
    // before any data both cohorts show the prior exceedance
    for (const g of gauges) {
      expect(g.querySelector(".gauge-exceedance")!.textContent).toBe("0.3841");
    }
    expect(visibleBanner(doc)).toBeNull();
    expect(doc.querySelector<HTMLButtonElement>("button.undo")!.disabled).toBe(true);

    // the side panels arrive once their service calls settle
    await until(() => doc.querySelector("table.boundary-table"), "boundary table");
    const slider = await until(
      () => doc.querySelector<HTMLInputElement>("input.horizon"),
      "what-if slider",
    );
    expect(slider.max).toBe("20");
  }, 60000);

  it("raises the stop banner after the scripted outcomes and survives a reload", async () => {
    const { win, doc, raw } = openConsole();
    await submitSetup(win, doc);

    const script: [1 | 2, boolean, string][] = [
      [2, false, "0 events in 1 of 20 patients"],
      [2, false, "0 events in 2 of 20 patients"],
      [2, false, "0 events in 3 of 20 patients"],
      [2, false, "0 events in 4 of 20 patients"],
      [2, false, "0 events in 5 of 20 patients"],
      [2, false, "0 events in 6 of 20 patients"],
      [1, false, "0 events in 1 of 20 patients"],
      [1, true, "1 events in 2 of 20 patients"],
      [1, true, "2 events in 3 of 20 patients"],
      [1, true, "3 events in 4 of 20 patients"],
      [1, true, "4 events in 5 of 20 patients"],
    ];
    for (const [cohort, toxic, counts] of script) {
      await clickAndSettle(doc, cohort, toxic, counts);
      expect(visibleBanner(doc)).toBeNull();
    }
    await clickAndSettle(doc, 1, true, "5 events in 6 of 20 patients");

    const banner = await until(() => visibleBanner(doc), "stop banner");
    expect(banner.textContent).toContain("cohort 1");
    const gauge1 = doc.querySelector('section.gauge[data-cohort="1"]')!;
    expect(gauge1.classList.contains("frozen")).toBe(true);
    expect(gauge1.querySelector(".gauge-status")!.textContent).toBe("stopped (toxicity)");
    expect(gauge1.querySelector(".gauge-exceedance")!.textContent).toBe("0.9943");
    expect(recordButton(doc, 1, true).disabled).toBe(true);
    expect(recordButton(doc, 2, false).disabled).toBe(false);
    // only cohort 2 can still enroll, so the horizon tops out at its headroom
    const slider = await until(
      () =>
        doc.querySelector<HTMLInputElement>("input.horizon")?.max === "14" &&
        doc.querySelector<HTMLInputElement>("input.horizon"),
      "settled what-if slider",
    );
    expect(slider.max).toBe("14");

    // reload: a second window boots from the persisted session alone
    const payload = raw.localStorage.getItem(STORAGE_KEY);
    expect(payload).toBeTruthy();
    const second = new HappyWindow({ url: `${BASE}/` });
    openWindows.push(second);
    const win2 = second as unknown as DomWindow;
    win2.document.body.innerHTML = '<div id="app"></div>';
    win2.localStorage.setItem(STORAGE_KEY, payload!);
    bootstrap(win2);
    const banner2 = await until(() => visibleBanner(win2.document), "banner after reload");
    expect(banner2.textContent).toContain("cohort 1");
    expect(gaugeCounts(win2.document, 1)).toBe("5 events in 6 of 20 patients");
    expect(
      win2.document
        .querySelector('section.gauge[data-cohort="1"] .gauge-exceedance')!
        .textContent,
    ).toBe("0.9943");
  }, 120000);

  it("colors the (1,0) what-if cell as stop at horizon 1 from (5,4,5,0)", async () => {
    const { win, doc } = openConsole();
    await submitSetup(win, doc);

    const script: [1 | 2, boolean, string][] = [
      [2, false, "0 events in 1 of 20 patients"],
      [2, false, "0 events in 2 of 20 patients"],
      [2, false, "0 events in 3 of 20 patients"],
      [2, false, "0 events in 4 of 20 patients"],
      [2, false, "0 events in 5 of 20 patients"],
      [1, false, "0 events in 1 of 20 patients"],
      [1, true, "1 events in 2 of 20 patients"],
      [1, true, "2 events in 3 of 20 patients"],
      [1, true, "3 events in 4 of 20 patients"],
    ];
    for (const [cohort, toxic, counts] of script) {
      await clickAndSettle(doc, cohort, toxic, counts);
    }
    await clickAndSettle(doc, 1, true, "4 events in 5 of 20 patients");
    await until(() => visibleBanner(doc), "stop banner at (5,4,5,0)");

    // wait for the panel to settle, then move the horizon to 1
    const slider = await until(
      () =>
        doc.querySelector<HTMLInputElement>("input.horizon")?.max === "15" &&
        doc.querySelector<HTMLInputElement>("input.horizon"),
      "settled what-if slider",
    );
    slider.value = "1";
    slider.dispatchEvent(new win.Event("change", { bubbles: true }));

    const stopCell = await until(
      () => doc.querySelector('td[data-j1="1"][data-j2="0"]'),
      "what-if cell (1,0)",
    );
    expect(stopCell.classList.contains("cell-stop")).toBe(true);
    expect(
      doc.querySelector('td[data-j1="0"][data-j2="0"]')!.classList.contains("cell-continue"),
    ).toBe(true);
    const grid = doc.querySelector("table.whatif-grid")!;
    expect(grid.querySelectorAll("tr")).toHaveLength(2);
    expect(grid.querySelectorAll("td")).toHaveLength(4);

    // clicking the cell surfaces the projected verdicts
    (stopCell as HTMLElement).click();
    const notice = await until(() => doc.querySelector(".notice-info"), "cell details");
    expect(notice.textContent).toContain("stop");
  }, 120000);
});
