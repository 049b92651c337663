/** Session log: the trial configuration plus the ordered outcome events.
 *
 * The log is the single source of truth; everything rendered is derived
 * from it via service responses.  Events use the same JSON schema as the
 * command-line tool's --log files, so a console export can be replayed by
 * the CLI and vice versa.  Statuses sent to the service are bookkeeping
 * only (a cohort at its cap is completed, otherwise active); whether a
 * cohort must stop is always the service's answer, never computed here.
 */

import type { ApiClient } from "./api.js";
import type {
  DecisionResponse,
  EventRecord,
  StateBody,
  TrialConfigJson,
} from "./types.js";

export const STORAGE_KEY = "tox2mon.session";
export const STORAGE_VERSION = 1;

export interface SessionLog {
  storageVersion: number;
  /** Monotone save counter used to detect concurrent-tab edits. */
  revision: number;
  config: TrialConfigJson;
  events: EventRecord[];
}

export class ImportError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ImportError";
  }
}

export class ProtocolError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ProtocolError";
  }
}

export class StorageConflictError extends Error {
  constructor() {
    super(
      "the stored session was changed by another tab; reload before editing",
    );
    this.name = "StorageConflictError";
  }
}

export function newSession(config: TrialConfigJson): SessionLog {
  return { storageVersion: STORAGE_VERSION, revision: 0, config, events: [] };
}

export interface Counts {
  n1: number;
  k1: number;
  n2: number;
  k2: number;
}

/** Tally the first `upto` events (all of them by default). */
export function countsAt(events: EventRecord[], upto?: number): Counts {
  const end = upto === undefined ? events.length : upto;
  const c: Counts = { n1: 0, k1: 0, n2: 0, k2: 0 };
  for (const e of events.slice(0, end)) {
    if (e.cohort === 1) {
      c.n1 += 1;
      if (e.toxic) c.k1 += 1;
    } else {
      c.n2 += 1;
      if (e.toxic) c.k2 += 1;
    }
  }
  return c;
}

/** State body for the service: counts plus cap-derived statuses. */
export function declaredState(
  config: TrialConfigJson,
  counts: Counts,
): StateBody {
  return {
    ...counts,
    status1: counts.n1 >= config.maxN1 ? "completed" : "active",
    status2: counts.n2 >= config.maxN2 ? "completed" : "active",
  };
}

export function appendEvent(
  session: SessionLog,
  cohort: 1 | 2,
  toxic: boolean,
): SessionLog {
  const counts = countsAt(session.events);
  const n = cohort === 1 ? counts.n1 : counts.n2;
  const cap = cohort === 1 ? session.config.maxN1 : session.config.maxN2;
  if (n >= cap) {
    throw new ProtocolError(
      `cohort ${cohort} already has its maximum of ${cap} patients`,
    );
  }
  const last = session.events[session.events.length - 1];
  const seq = (last ? last.seq : 0) + 1;
  return {
    ...session,
    revision: session.revision + 1,
    events: [...session.events, { seq, cohort, toxic }],
  };
}

export function undoLast(session: SessionLog): SessionLog {
  if (session.events.length === 0) {
    throw new ProtocolError("nothing to undo");
  }
  return {
    ...session,
    revision: session.revision + 1,
    events: session.events.slice(0, -1),
  };
}

/** Serialize the events in the shared event-log JSON schema. */
export function exportEvents(session: SessionLog): string {
  return JSON.stringify(session.events, null, 2) + "\n";
}

const EVENT_KEYS = ["seq", "cohort", "toxic"] as const;

/** Parse and validate an event-log JSON document. */
export function parseEventLog(text: string): EventRecord[] {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new ImportError(`not valid JSON: ${String(err)}`);
  }
  if (!Array.isArray(raw)) {
    throw new ImportError("an event log must be a JSON array");
  }
  const events: EventRecord[] = [];
  let prevSeq = 0;
  raw.forEach((item, i) => {
    if (typeof item !== "object" || item === null || Array.isArray(item)) {
      throw new ImportError(`entry ${i} is not an object`);
    }
    const obj = item as Record<string, unknown>;
    for (const key of Object.keys(obj)) {
      if (!(EVENT_KEYS as readonly string[]).includes(key)) {
        throw new ImportError(`entry ${i} has an unknown key "${key}"`);
      }
    }
    for (const key of EVENT_KEYS) {
      if (!(key in obj)) {
        throw new ImportError(`entry ${i} is missing "${key}"`);
      }
    }
    const { seq, cohort, toxic } = obj;
    if (typeof seq !== "number" || !Number.isInteger(seq) || seq <= 0) {
      throw new ImportError(`entry ${i}: seq must be a positive integer`);
    }
    if (typeof toxic !== "boolean") {
      throw new ImportError(`entry ${i}: toxic must be a boolean`);
    }
    if (cohort !== 1 && cohort !== 2) {
      throw new ImportError(`entry ${i}: cohort must be 1 or 2`);
    }
    if (seq <= prevSeq) {
      throw new ImportError(
        `entry ${i}: seq ${seq} does not increase (previous was ${prevSeq})`,
      );
    }
    prevSeq = seq;
    events.push({ seq, cohort, toxic });
  });
  return events;
}

/** Reject logs that enrol a cohort beyond its configured cap. */
export function checkCapacities(
  config: TrialConfigJson,
  events: EventRecord[],
): void {
  const c: Counts = { n1: 0, k1: 0, n2: 0, k2: 0 };
  for (const e of events) {
    if (e.cohort === 1) {
      c.n1 += 1;
      if (c.n1 > config.maxN1) {
        throw new ImportError(
          `event ${e.seq} enrols cohort 1 beyond its cap of ${config.maxN1}`,
        );
      }
    } else {
      c.n2 += 1;
      if (c.n2 > config.maxN2) {
        throw new ImportError(
          `event ${e.seq} enrols cohort 2 beyond its cap of ${config.maxN2}`,
        );
      }
    }
  }
}

/** Decisions along the whole log: index d is the decision after d events
 * (index 0 is the prior state).  Rejects logs that keep enrolling a cohort
 * after the service told it to stop, mirroring the CLI replay semantics. */
export async function replayThroughService(
  api: ApiClient,
  config: TrialConfigJson,
  events: EventRecord[],
): Promise<DecisionResponse[]> {
  checkCapacities(config, events);
  const history: DecisionResponse[] = [];
  let current = await api.decision(config, declaredState(config, countsAt(events, 0)));
  history.push(current);
  for (let i = 0; i < events.length; i++) {
    const e = events[i]!;
    const verdict = current.perCohort.find((p) => p.cohort === e.cohort);
    if (verdict && verdict.stop) {
      throw new ImportError(
        `event ${e.seq} enrols cohort ${e.cohort} after it stopped for toxicity`,
      );
    }
    current = await api.decision(
      config,
      declaredState(config, countsAt(events, i + 1)),
    );
    history.push(current);
  }
  return history;
}

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export interface LoadResult {
  session: SessionLog | null;
  /** Human-readable reason when a stored session was discarded. */
  diagnostic: string | null;
}

export function loadSession(storage: StorageLike): LoadResult {
  const text = storage.getItem(STORAGE_KEY);
  if (text === null) return { session: null, diagnostic: null };
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return { session: null, diagnostic: "stored session was not valid JSON" };
  }
  const obj = raw as Partial<SessionLog>;
  if (obj.storageVersion !== STORAGE_VERSION) {
    return {
      session: null,
      diagnostic: `stored session has storage version ${String(
        obj.storageVersion,
      )}, expected ${STORAGE_VERSION}`,
    };
  }
  if (
    typeof obj.revision !== "number" ||
    typeof obj.config !== "object" ||
    obj.config === null ||
    !Array.isArray(obj.events)
  ) {
    return { session: null, diagnostic: "stored session is malformed" };
  }
  try {
    parseEventLog(JSON.stringify(obj.events));
  } catch (err) {
    return {
      session: null,
      diagnostic: `stored session events are invalid: ${String(err)}`,
    };
  }
  return {
    session: {
      storageVersion: STORAGE_VERSION,
      revision: obj.revision,
      config: obj.config as TrialConfigJson,
      events: obj.events as EventRecord[],
    },
    diagnostic: null,
  };
}

/** Persist the session; refuses to clobber a newer concurrent-tab write. */
export function saveSession(storage: StorageLike, session: SessionLog): void {
  const stored = loadSession(storage).session;
  if (stored !== null && stored.revision >= session.revision) {
    throw new StorageConflictError();
  }
  storage.setItem(STORAGE_KEY, JSON.stringify(session));
}

export function clearSession(storage: StorageLike): void {
  storage.removeItem(STORAGE_KEY);
}
