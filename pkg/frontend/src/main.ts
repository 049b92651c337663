/** Application wiring: session persistence, service calls, rendering. */

import { ApiClient, ApiError, ServiceUnreachableError, feasibleRhoInterval } from "./api.js";
import {
  ImportError,
  ProtocolError,
  StorageConflictError,
  appendEvent,
  clearSession,
  countsAt,
  declaredState,
  exportEvents,
  loadSession,
  newSession,
  parseEventLog,
  replayThroughService,
  saveSession,
  undoLast,
  type SessionLog,
  type StorageLike,
} from "./state.js";
import type { DecisionResponse, EventRecord, TrialConfigJson } from "./types.js";
import {
  buildBoundaryTable,
  buildDashboard,
  buildWhatIf,
  horizonCap,
  validateSetup,
  type SetupDraft,
} from "./viewmodel.js";
import {
  renderBoundaryTable,
  renderDashboard,
  renderNotice,
  renderSetupForm,
  renderWhatIf,
} from "./ui.js";

const DEFAULT_DRAFT: SetupDraft = {
  p1: "0.2",
  p2: "0.2",
  ess: "3",
  rho: "0.5",
  theta01: "0.2",
  theta02: "0.2",
  tau: "0.98",
  maxN1: "20",
  maxN2: "20",
  rule: "correlated",
};

interface Regions {
  notice: HTMLElement;
  main: HTMLElement;
  whatif: HTMLElement;
  boundary: HTMLElement;
}

export class Controller {
  private session: SessionLog | null = null;
  /** history[i] is the service decision after the first i events. */
  private history: DecisionResponse[] = [];
  private pendingEventSeq: number | null = null;
  private horizon = 0;

  constructor(
    private readonly doc: Document,
    private readonly regions: Regions,
    private readonly api: ApiClient,
    private readonly storage: StorageLike,
  ) {}

  async start(): Promise<void> {
    const { session, diagnostic } = loadSession(this.storage);
    if (diagnostic) this.notice("warning", diagnostic);
    if (session === null) {
      this.renderSetup(DEFAULT_DRAFT, {});
      return;
    }
    try {
      this.history = await replayThroughService(
        this.api,
        session.config,
        session.events,
      );
      this.session = session;
      await this.renderAll();
    } catch (err) {
      this.notice("error", `stored session could not be restored: ${String(err)}`);
      this.renderSetup(DEFAULT_DRAFT, {});
    }
  }

  private renderSetup(
    draft: SetupDraft,
    serviceErrors: Partial<Record<keyof SetupDraft, string>>,
  ): void {
    renderSetupForm(
      this.doc,
      this.regions.main,
      draft,
      validateSetup(draft),
      serviceErrors,
      { onSubmit: (d) => void this.submitSetup(d) },
    );
  }

  async submitSetup(draft: SetupDraft): Promise<void> {
    const validation = validateSetup(draft);
    if (validation.config === null) {
      this.renderSetup(draft, {});
      return;
    }
    try {
      const session = newSession(validation.config);
      const initial = await this.api.decision(
        session.config,
        declaredState(session.config, countsAt(session.events)),
      );
      this.session = session;
      this.history = [initial];
      clearSession(this.storage);
      saveSession(this.storage, { ...session, revision: session.revision + 1 });
      this.session = { ...session, revision: session.revision + 1 };
      await this.renderAll();
    } catch (err) {
      if (err instanceof ApiError && err.code === "infeasible_prior") {
        const interval = feasibleRhoInterval(err);
        this.renderSetup(draft, {
          rho: interval
            ? `infeasible for these means; feasible interval is [${interval[0]}, ${interval[1]}]`
            : err.message,
        });
        return;
      }
      this.notice("error", String(err));
    }
  }

  async record(cohort: 1 | 2, toxic: boolean): Promise<void> {
    if (!this.session) return;
    let next: SessionLog;
    try {
      next = appendEvent(this.session, cohort, toxic);
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.notice("error", err.message);
        return;
      }
      throw err;
    }
    const appended = next.events[next.events.length - 1]!;
    this.session = next;
    this.persist();
    try {
      const decision = await this.api.decision(
        next.config,
        declaredState(next.config, countsAt(next.events)),
      );
      this.history.push(decision);
      this.pendingEventSeq = null;
      await this.renderAll();
    } catch (err) {
      if (err instanceof ServiceUnreachableError) {
        // The outcome stays in the log; only the verdict is pending.
        this.pendingEventSeq = appended.seq;
        this.notice(
          "error",
          "service unreachable; the outcome was kept locally",
          () => void this.retryPending(),
        );
        return;
      }
      throw err;
    }
  }

  async retryPending(): Promise<void> {
    if (!this.session || this.pendingEventSeq === null) return;
    try {
      const decision = await this.api.decision(
        this.session.config,
        declaredState(this.session.config, countsAt(this.session.events)),
      );
      this.history.push(decision);
      this.pendingEventSeq = null;
      await this.renderAll();
    } catch (err) {
      if (err instanceof ServiceUnreachableError) {
        this.notice(
          "error",
          "service still unreachable; the outcome is kept locally",
          () => void this.retryPending(),
        );
        return;
      }
      throw err;
    }
  }

  async undo(): Promise<void> {
    if (!this.session || this.session.events.length === 0) return;
    this.session = undoLast(this.session);
    if (this.pendingEventSeq !== null) {
      this.pendingEventSeq = null;
    } else {
      this.history.pop();
    }
    this.persist();
    await this.renderAll();
  }

  exportLog(): string {
    if (!this.session) throw new ProtocolError("no active session");
    return exportEvents(this.session);
  }

  async importLog(text: string): Promise<void> {
    if (!this.session) return;
    let events: EventRecord[];
    try {
      events = parseEventLog(text);
      this.history = await replayThroughService(
        this.api,
        this.session.config,
        events,
      );
    } catch (err) {
      if (err instanceof ImportError || err instanceof ApiError) {
        this.notice("error", `import rejected: ${err.message}`);
        return;
      }
      throw err;
    }
    this.session = {
      ...this.session,
      revision: this.session.revision + 1,
      events,
    };
    this.pendingEventSeq = null;
    this.persist();
    await this.renderAll();
  }

  latestDecision(): DecisionResponse {
    const settled =
      this.pendingEventSeq === null
        ? this.session?.events.length ?? 0
        : this.history.length - 1;
    const decision = this.history[Math.min(settled, this.history.length - 1)];
    if (!decision) throw new ProtocolError("no decision available yet");
    return decision;
  }

  private persist(): void {
    if (!this.session) return;
    try {
      saveSession(this.storage, this.session);
    } catch (err) {
      if (err instanceof StorageConflictError) {
        this.notice("warning", err.message);
        return;
      }
      throw err;
    }
  }

  private notice(
    kind: "error" | "warning" | "info",
    text: string,
    onRetry?: () => void,
  ): void {
    renderNotice(this.doc, this.regions.notice, kind, text, onRetry);
  }

  async renderAll(): Promise<void> {
    if (!this.session) return;
    this.regions.notice.replaceChildren();
    const session = this.session;
    const decision = this.latestDecision();
    const vm = buildDashboard(session.config, session.events.length, decision);
    renderDashboard(this.doc, this.regions.main, vm, {
      onRecord: (cohort, toxic) => void this.record(cohort, toxic),
      onUndo: () => void this.undo(),
      onExport: () => this.downloadExport(),
      onImportText: (text) => void this.importLog(text),
      onNewSession: () => {
        clearSession(this.storage);
        this.session = null;
        this.history = [];
        this.regions.whatif.replaceChildren();
        this.regions.boundary.replaceChildren();
        this.renderSetup(DEFAULT_DRAFT, {});
      },
    });
    await Promise.all([this.renderWhatIfPanel(), this.renderBoundaryPanel()]);
  }

  private async renderWhatIfPanel(): Promise<void> {
    if (!this.session) return;
    const session = this.session;
    const counts = countsAt(session.events);
    const vmDash = buildDashboard(
      session.config,
      session.events.length,
      this.latestDecision(),
    );
    const cap = horizonCap(session.config, counts, {
      1: vmDash.canRecord[1],
      2: vmDash.canRecord[2],
    });
    this.horizon = Math.max(0, Math.min(this.horizon, cap));
    if (cap === 0 && this.horizon === 0 && !vmDash.canRecord[1] && !vmDash.canRecord[2]) {
      this.regions.whatif.replaceChildren();
      return;
    }
    const response = await this.api.whatif(
      session.config,
      declaredState(session.config, counts),
      this.horizon,
    );
    renderWhatIf(
      this.doc,
      this.regions.whatif,
      buildWhatIf(response),
      cap,
      (h) => {
        this.horizon = h;
        void this.renderWhatIfPanel();
      },
      (lines) => this.notice("info", lines.join("; ")),
    );
  }

  private async renderBoundaryPanel(): Promise<void> {
    if (!this.session) return;
    const session = this.session;
    const nMax = Math.max(session.config.maxN1, session.config.maxN2);
    const response = await this.api.boundaryTable(session.config, nMax);
    renderBoundaryTable(this.doc, this.regions.boundary, buildBoundaryTable(response));
  }

  private downloadExport(): void {
    const text = this.exportLog();
    const blob = new Blob([text], { type: "application/json" });
    const url = URL.createObjectURL(blob);
    const anchor = this.doc.createElement("a");
    anchor.href = url;
    anchor.download = "tox2mon-events.json";
    anchor.click();
    URL.revokeObjectURL(url);
  }
}

export function bootstrap(win: Window & typeof globalThis): void {
  const doc = win.document;
  const root = doc.getElementById("app");
  if (!root) return;
  const regions: Regions = {
    notice: doc.createElement("div"),
    main: doc.createElement("div"),
    whatif: doc.createElement("div"),
    boundary: doc.createElement("div"),
  };
  regions.notice.id = "notice";
  regions.main.id = "main";
  regions.whatif.id = "whatif";
  regions.boundary.id = "boundary";
  root.replaceChildren(regions.notice, regions.main, regions.whatif, regions.boundary);
  const base =
    (win as { TOX2_API?: string }).TOX2_API ?? win.location.origin;
  const controller = new Controller(
    doc,
    regions,
    new ApiClient(base),
    win.localStorage,
  );
  void controller.start();
}

declare global {
  interface Window {
    TOX2_API?: string;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", () => bootstrap(window));
  } else {
    bootstrap(window);
  }
}
