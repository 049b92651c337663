/** DOM rendering. Render functions are plain (view model in, elements out)
 * so they can be exercised under a DOM test environment without a browser. */

import type {
  BoundaryTableVM,
  DashboardVM,
  SetupDraft,
  SetupValidation,
  WhatIfVM,
} from "./viewmodel.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface DashboardHandlers {
  onRecord(cohort: 1 | 2, toxic: boolean): void;
  onUndo(): void;
  onExport(): void;
  onImportText(text: string): void;
  onNewSession(): void;
}

export function renderBanner(doc: Document, vm: DashboardVM): HTMLElement {
  const banner = el(doc, "div", "stop-banner");
  if (!vm.banner.raised) {
    banner.classList.add("hidden");
    return banner;
  }
  banner.setAttribute("role", "alert");
  banner.appendChild(el(doc, "strong", "stop-banner-text", vm.banner.text));
  return banner;
}

export function renderGauges(doc: Document, vm: DashboardVM): HTMLElement {
  const wrap = el(doc, "div", "gauges");
  for (const g of vm.gauges) {
    const card = el(doc, "section", "gauge");
    card.dataset.cohort = String(g.cohort);
    if (g.frozen) card.classList.add("frozen");
    card.appendChild(el(doc, "h3", undefined, `Cohort ${g.cohort}`));
    card.appendChild(
      el(doc, "p", "gauge-counts", `${g.k} events in ${g.n} of ${g.cap} patients`),
    );
    const prob = el(doc, "p", "gauge-exceedance", g.exceedanceText);
    prob.classList.add(g.stop ? "verdict-stop" : "verdict-continue");
    card.appendChild(prob);
    card.appendChild(el(doc, "p", "gauge-status", g.statusLabel));
    card.appendChild(el(doc, "p", "gauge-boundary", g.boundaryText));
    wrap.appendChild(card);
  }
  return wrap;
}

export function renderComparison(doc: Document, vm: DashboardVM): HTMLElement {
  const table = el(doc, "table", "rule-comparison");
  const head = el(doc, "tr");
  head.appendChild(el(doc, "th", undefined, "rule"));
  head.appendChild(el(doc, "th", undefined, "cohort 1"));
  head.appendChild(el(doc, "th", undefined, "cohort 2"));
  table.appendChild(head);
  for (const row of vm.comparison) {
    const tr = el(doc, "tr", row.activeRule ? "active-rule" : undefined);
    tr.appendChild(el(doc, "th", undefined, row.rule));
    for (const cell of row.cells) {
      const td = el(
        doc,
        "td",
        cell.stop ? "verdict-stop" : "verdict-continue",
        cell.exceedanceText,
      );
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  return table;
}

export function renderControls(
  doc: Document,
  vm: DashboardVM,
  handlers: DashboardHandlers,
): HTMLElement {
  const bar = el(doc, "div", "controls");
  for (const cohort of [1, 2] as const) {
    for (const toxic of [false, true]) {
      const btn = el(
        doc,
        "button",
        "record",
        `cohort ${cohort}: ${toxic ? "toxicity" : "no toxicity"}`,
      );
      btn.dataset.cohort = String(cohort);
      btn.dataset.toxic = String(toxic);
      btn.disabled = !vm.canRecord[cohort];
      btn.addEventListener("click", () => handlers.onRecord(cohort, toxic));
      bar.appendChild(btn);
    }
  }
  const undo = el(doc, "button", "undo", "undo last outcome");
  undo.disabled = !vm.canUndo;
  undo.addEventListener("click", () => handlers.onUndo());
  bar.appendChild(undo);

  const exportBtn = el(doc, "button", "export", "export event log");
  exportBtn.addEventListener("click", () => handlers.onExport());
  bar.appendChild(exportBtn);

  const importInput = el(doc, "input", "import") as HTMLInputElement;
  importInput.type = "file";
  importInput.accept = "application/json";
  importInput.addEventListener("change", () => {
    const file = importInput.files && importInput.files[0];
    if (!file) return;
    void file.text().then((text) => handlers.onImportText(text));
  });
  bar.appendChild(importInput);

  const reset = el(doc, "button", "new-session", "new session");
  reset.addEventListener("click", () => handlers.onNewSession());
  bar.appendChild(reset);
  return bar;
}

export function renderDashboard(
  doc: Document,
  container: HTMLElement,
  vm: DashboardVM,
  handlers: DashboardHandlers,
): void {
  container.replaceChildren(
    renderBanner(doc, vm),
    renderGauges(doc, vm),
    renderComparison(doc, vm),
    renderControls(doc, vm, handlers),
  );
}

export function renderWhatIf(
  doc: Document,
  container: HTMLElement,
  vm: WhatIfVM,
  maxHorizon: number,
  onHorizon: (h: number) => void,
  onCell: (lines: string[]) => void,
): void {
  container.replaceChildren();
  const label = el(doc, "label", undefined, `what-if horizon: ${vm.horizon}`);
  const slider = el(doc, "input", "horizon") as HTMLInputElement;
  slider.type = "range";
  slider.min = "0";
  slider.max = String(maxHorizon);
  slider.value = String(Math.min(vm.horizon, maxHorizon));
  slider.addEventListener("change", () => {
    onHorizon(Math.max(0, Math.min(maxHorizon, Number(slider.value))));
  });
  label.appendChild(slider);
  container.appendChild(label);

  const table = el(doc, "table", "whatif-grid");
  for (const row of vm.rows) {
    const tr = el(doc, "tr");
    for (const cell of row) {
      const td = el(
        doc,
        "td",
        cell.stop ? "cell-stop" : "cell-continue",
        `${cell.j1},${cell.j2}`,
      );
      td.dataset.j1 = String(cell.j1);
      td.dataset.j2 = String(cell.j2);
      td.addEventListener("click", () => onCell(cell.detailLines));
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  container.appendChild(table);
}

export function renderBoundaryTable(
  doc: Document,
  container: HTMLElement,
  vm: BoundaryTableVM,
): void {
  container.replaceChildren();
  container.appendChild(
    el(doc, "h3", undefined, `stopping boundaries (${vm.rule} rule)`),
  );
  const table = el(doc, "table", "boundary-table");
  const head = el(doc, "tr");
  head.appendChild(el(doc, "th", undefined, "k2"));
  for (const h of vm.header) head.appendChild(el(doc, "th", undefined, h));
  table.appendChild(head);
  for (const row of vm.rows) {
    const tr = el(doc, "tr");
    tr.appendChild(el(doc, "th", undefined, String(row.k2)));
    for (const cell of row.cells) {
      tr.appendChild(el(doc, "td", `cell-${cell.kind}`, cell.text));
    }
    table.appendChild(tr);
  }
  container.appendChild(table);
}

export interface SetupHandlers {
  onSubmit(draft: SetupDraft): void;
}

const SETUP_FIELDS: {
  name: keyof SetupDraft;
  label: string;
}[] = [
  { name: "p1", label: "prior mean toxicity, cohort 1" },
  { name: "p2", label: "prior mean toxicity, cohort 2" },
  { name: "ess", label: "prior effective sample size" },
  { name: "rho", label: "prior correlation" },
  { name: "theta01", label: "reference rate theta01" },
  { name: "theta02", label: "reference rate theta02" },
  { name: "tau", label: "stopping threshold tau" },
  { name: "maxN1", label: "maximum patients, cohort 1" },
  { name: "maxN2", label: "maximum patients, cohort 2" },
];

export function renderSetupForm(
  doc: Document,
  container: HTMLElement,
  draft: SetupDraft,
  validation: SetupValidation,
  serviceErrors: Partial<Record<keyof SetupDraft, string>>,
  handlers: SetupHandlers,
): void {
  container.replaceChildren();
  const form = el(doc, "form", "setup");
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    handlers.onSubmit(readDraft(form, draft.rule));
  });
  for (const field of SETUP_FIELDS) {
    const row = el(doc, "label", "field");
    row.appendChild(el(doc, "span", undefined, field.label));
    const input = el(doc, "input") as HTMLInputElement;
    input.name = field.name;
    input.value = draft[field.name];
    row.appendChild(input);
    const message = validation.errors[field.name] ?? serviceErrors[field.name];
    if (message) {
      row.appendChild(el(doc, "span", "field-error", message));
    }
    form.appendChild(row);
  }
  const ruleRow = el(doc, "label", "field");
  ruleRow.appendChild(el(doc, "span", undefined, "monitoring rule"));
  const select = el(doc, "select") as HTMLSelectElement;
  select.name = "rule";
  for (const rule of ["correlated", "independent", "pooled"]) {
    const opt = el(doc, "option", undefined, rule) as HTMLOptionElement;
    opt.value = rule;
    opt.selected = rule === draft.rule;
    select.appendChild(opt);
  }
  ruleRow.appendChild(select);
  form.appendChild(ruleRow);

  const submit = el(doc, "button", "start", "start session") as HTMLButtonElement;
  submit.type = "submit";
  submit.disabled = hasEmptyField(draft);
  form.appendChild(submit);
  container.appendChild(form);
}

function hasEmptyField(draft: SetupDraft): boolean {
  return SETUP_FIELDS.some((f) => draft[f.name].trim() === "");
}

function readDraft(form: HTMLFormElement, fallbackRule: string): SetupDraft {
  const value = (name: string): string => {
    const input = form.querySelector<HTMLInputElement>(`input[name="${name}"]`);
    return input ? input.value : "";
  };
  const select = form.querySelector<HTMLSelectElement>('select[name="rule"]');
  return {
    p1: value("p1"),
    p2: value("p2"),
    ess: value("ess"),
    rho: value("rho"),
    theta01: value("theta01"),
    theta02: value("theta02"),
    tau: value("tau"),
    maxN1: value("maxN1"),
    maxN2: value("maxN2"),
    rule: (select ? select.value : fallbackRule) as SetupDraft["rule"],
  };
}

export function renderNotice(
  doc: Document,
  container: HTMLElement,
  kind: "error" | "warning" | "info",
  text: string,
  onRetry?: () => void,
): void {
  const notice = el(doc, "div", `notice notice-${kind}`, text);
  if (onRetry) {
    const retry = el(doc, "button", "retry", "retry");
    retry.addEventListener("click", onRetry);
    notice.appendChild(retry);
  }
  container.replaceChildren(notice);
}
