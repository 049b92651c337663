"""Sequential monitoring of a two-cohort trial: state, decisions, boundaries.

A trial configuration fixes per-cohort toxicity references theta0_i, a
posterior probability threshold tau, maximum cohort sizes, the prior, and
which monitoring rule is in force (correlated, independent, or pooled).
After every enrolled patient the rule's exceedance probability is compared
with tau; an active cohort whose exceedance reaches tau stops for toxicity.
A cohort that reaches its maximum size completes, and completion preempts
any further stopping, so toxicity stops only ever happen strictly before
the sample size limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence, Union

from .bivariate_beta import AlphaVector, PriorElicitation, elicit
from .errors import DomainError, StateError
from .posterior import (
    DataSummary,
    exceedance_correlated,
    exceedance_independent,
    exceedance_pooled,
)

__all__ = [
    "RULES",
    "ACTIVE",
    "STOPPED_TOXICITY",
    "COMPLETED",
    "NOT_APPLICABLE",
    "TrialConfig",
    "TrialState",
    "Decision",
    "apply_outcome",
    "decide",
    "mark_stops",
    "replay_events",
    "parse_event_log",
    "rule_exceedance",
    "boundary_k",
    "project_decisions",
    "BoundaryTable",
    "boundary_table",
]

RULES = ("correlated", "independent", "pooled")

ACTIVE = "active"
STOPPED_TOXICITY = "stopped_toxicity"
COMPLETED = "completed"
_STATUSES = (ACTIVE, STOPPED_TOXICITY, COMPLETED)

# Boundary-table cell marker for (k2 > n) cells that cannot occur.
NOT_APPLICABLE = "na"

PriorSpec = Union[PriorElicitation, AlphaVector]


@dataclass(frozen=True)
class TrialConfig:
    """Immutable monitoring configuration shared by all decision machinery."""

    theta01: float
    theta02: float
    tau: float
    max_n1: int
    max_n2: int
    prior: PriorSpec
    rule: str

    def __post_init__(self) -> None:
        for name in ("theta01", "theta02"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0.0 < v < 1.0):
                raise DomainError(f"{name} must lie strictly in (0, 1), got {v!r}")
        if not (isinstance(self.tau, (int, float)) and 0.5 <= self.tau < 1.0):
            raise DomainError(f"tau must lie in [0.5, 1), got {self.tau!r}")
        for name in ("max_n1", "max_n2"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v!r}")
        if self.rule not in RULES:
            raise DomainError(f"rule must be one of {RULES}, got {self.rule!r}")
        if not isinstance(self.prior, (PriorElicitation, AlphaVector)):
            raise DomainError(
                "prior must be a PriorElicitation or an AlphaVector"
            )

    def alpha(self) -> AlphaVector:
        """The Dirichlet component parameters of the configured prior."""
        if isinstance(self.prior, AlphaVector):
            return self.prior
        return elicit(self.prior)

    def theta0(self, cohort: int) -> float:
        return self.theta01 if cohort == 1 else self.theta02

    def max_n(self, cohort: int) -> int:
        return self.max_n1 if cohort == 1 else self.max_n2

    def to_json(self) -> dict:
        return {
            "theta01": self.theta01,
            "theta02": self.theta02,
            "tau": self.tau,
            "maxN1": self.max_n1,
            "maxN2": self.max_n2,
            "prior": self.prior.to_json(),
            "rule": self.rule,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "TrialConfig":
        if not isinstance(obj, Mapping):
            raise DomainError("trial configuration must be a JSON object")
        known = {"theta01", "theta02", "tau", "maxN1", "maxN2", "prior", "rule"}
        extra = set(obj) - known
        if extra:
            raise DomainError(f"unknown configuration keys: {sorted(extra)}")
        missing = known - set(obj)
        if missing:
            raise DomainError(f"missing configuration keys: {sorted(missing)}")
        prior_obj = obj["prior"]
        if not isinstance(prior_obj, Mapping):
            raise DomainError("prior must be a JSON object")
        if "p1" in prior_obj:
            prior: PriorSpec = PriorElicitation.from_json(prior_obj)
        else:
            prior = AlphaVector.from_json(prior_obj)
        try:
            return cls(
                theta01=float(obj["theta01"]),
                theta02=float(obj["theta02"]),
                tau=float(obj["tau"]),
                max_n1=int(obj["maxN1"]),
                max_n2=int(obj["maxN2"]),
                prior=prior,
                rule=str(obj["rule"]),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"malformed trial configuration: {exc}") from exc


@dataclass(frozen=True)
class TrialState:
    """Current counts and per-cohort lifecycle status of a running trial.

    ``stop1``/``stop2`` freeze the (n, k) at which a cohort stopped for
    toxicity; they are present exactly when the status says so.
    """

    data: DataSummary
    max_n1: int
    max_n2: int
    status1: str = ACTIVE
    status2: str = ACTIVE
    stop1: tuple[int, int] | None = None
    stop2: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        for name, status in (("status1", self.status1), ("status2", self.status2)):
            if status not in _STATUSES:
                raise StateError(f"{name} must be one of {_STATUSES}, got {status!r}")
        for cohort in (1, 2):
            n = self.n(cohort)
            cap = self.max_n(cohort)
            status = self.status(cohort)
            record = self.stop_record(cohort)
            if n > cap:
                raise StateError(f"cohort {cohort} has n={n} above its cap {cap}")
            if status == COMPLETED and n != cap:
                raise StateError(
                    f"cohort {cohort} is marked completed at n={n} but its cap is {cap}"
                )
            if status == ACTIVE and n >= cap:
                raise StateError(
                    f"cohort {cohort} cannot be active at its cap n={n}={cap}"
                )
            if status == STOPPED_TOXICITY:
                if record is None:
                    raise StateError(f"cohort {cohort} stopped without a stop record")
                if record != (n, self.k(cohort)):
                    raise StateError(
                        f"cohort {cohort} stop record {record} disagrees with "
                        f"current counts ({n}, {self.k(cohort)})"
                    )
            elif record is not None:
                raise StateError(
                    f"cohort {cohort} carries a stop record but is {status}"
                )

    @classmethod
    def initial(cls, cfg: TrialConfig) -> "TrialState":
        return cls(DataSummary(0, 0, 0, 0), cfg.max_n1, cfg.max_n2)

    def n(self, cohort: int) -> int:
        return self.data.n1 if cohort == 1 else self.data.n2

    def k(self, cohort: int) -> int:
        return self.data.k1 if cohort == 1 else self.data.k2

    def status(self, cohort: int) -> str:
        return self.status1 if cohort == 1 else self.status2

    def max_n(self, cohort: int) -> int:
        return self.max_n1 if cohort == 1 else self.max_n2

    def stop_record(self, cohort: int) -> tuple[int, int] | None:
        return self.stop1 if cohort == 1 else self.stop2

    def is_active(self, cohort: int) -> bool:
        return self.status(cohort) == ACTIVE

    def to_json(self) -> dict:
        out: dict = {
            "data": self.data.to_json(),
            "maxN1": self.max_n1,
            "maxN2": self.max_n2,
            "status1": self.status1,
            "status2": self.status2,
        }
        if self.stop1 is not None:
            out["stop1"] = {"n": self.stop1[0], "k": self.stop1[1]}
        if self.stop2 is not None:
            out["stop2"] = {"n": self.stop2[0], "k": self.stop2[1]}
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "TrialState":
        try:
            data = DataSummary.from_json(obj["data"])
            stop1 = obj.get("stop1")
            stop2 = obj.get("stop2")
            return cls(
                data=data,
                max_n1=int(obj["maxN1"]),
                max_n2=int(obj["maxN2"]),
                status1=str(obj.get("status1", ACTIVE)),
                status2=str(obj.get("status2", ACTIVE)),
                stop1=(int(stop1["n"]), int(stop1["k"])) if stop1 else None,
                stop2=(int(stop2["n"]), int(stop2["k"])) if stop2 else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, (DomainError, StateError)):
                raise
            raise StateError(f"malformed trial state: {exc}") from exc


@dataclass(frozen=True)
class Decision:
    """Monitoring verdict for one cohort at the current state."""

    cohort: int
    n: int
    k: int
    status: str
    exceedance: float
    stop: bool

    def to_json(self) -> dict:
        return {
            "cohort": self.cohort,
            "n": self.n,
            "k": self.k,
            "status": self.status,
            "exceedance": self.exceedance,
            "stop": self.stop,
        }


def apply_outcome(state: TrialState, cohort: int, toxic: bool) -> TrialState:
    """Enroll one patient in an active cohort and record the outcome.

    The cohort is marked completed the moment its count reaches the cap.
    """
    if cohort not in (1, 2):
        raise DomainError(f"cohort must be 1 or 2, got {cohort!r}")
    if not state.is_active(cohort):
        raise StateError(
            f"cannot enroll in cohort {cohort}: status is {state.status(cohort)}"
        )
    n1, k1, n2, k2 = state.data.n1, state.data.k1, state.data.n2, state.data.k2
    if cohort == 1:
        n1 += 1
        k1 += int(bool(toxic))
    else:
        n2 += 1
        k2 += int(bool(toxic))
    data = DataSummary(n1, k1, n2, k2)
    updates: dict = {"data": data}
    if cohort == 1 and n1 == state.max_n1:
        updates["status1"] = COMPLETED
    if cohort == 2 and n2 == state.max_n2:
        updates["status2"] = COMPLETED
    return replace(state, **updates)


def rule_exceedance(cfg: TrialConfig, data: DataSummary, cohort: int) -> float:
    """Exceedance probability for one cohort under the configured rule."""
    alpha = cfg.alpha()
    theta0 = cfg.theta0(cohort)
    if cfg.rule == "correlated":
        return exceedance_correlated(alpha, data, theta0, cohort)
    if cfg.rule == "independent":
        n = data.n1 if cohort == 1 else data.n2
        k = data.k1 if cohort == 1 else data.k2
        return exceedance_independent(alpha, n, k, theta0, cohort)
    return exceedance_pooled(alpha, data, theta0)


def decide(cfg: TrialConfig, state: TrialState) -> tuple[Decision, Decision]:
    """Evaluate the stopping rule for both cohorts at the current state.

    Active cohorts stop when their exceedance reaches tau (the comparison
    is non-strict).  Stopped cohorts keep stop=True on their frozen record;
    completed cohorts never stop.  Under the pooled rule each cohort is
    compared against its own theta0, so with equal references a pooled
    crossing halts both active cohorts at once.
    """
    out = []
    for cohort in (1, 2):
        exc = rule_exceedance(cfg, state.data, cohort)
        status = state.status(cohort)
        if status == ACTIVE:
            stop = exc >= cfg.tau
        else:
            stop = status == STOPPED_TOXICITY
        out.append(
            Decision(
                cohort=cohort,
                n=state.n(cohort),
                k=state.k(cohort),
                status=status,
                exceedance=exc,
                stop=stop,
            )
        )
    return out[0], out[1]


def mark_stops(
    state: TrialState, decisions: tuple[Decision, Decision]
) -> TrialState:
    """Freeze stop records for active cohorts whose decision says stop."""
    updates: dict = {}
    for decision in decisions:
        if decision.stop and state.is_active(decision.cohort):
            record = (state.n(decision.cohort), state.k(decision.cohort))
            if decision.cohort == 1:
                updates["status1"] = STOPPED_TOXICITY
                updates["stop1"] = record
            else:
                updates["status2"] = STOPPED_TOXICITY
                updates["stop2"] = record
    return replace(state, **updates) if updates else state


def parse_event_log(obj) -> list[tuple[int, int, bool]]:
    """Validate an enrollment event log: [{"seq", "cohort", "toxic"}, ...]."""
    if not isinstance(obj, Sequence) or isinstance(obj, (str, bytes)):
        raise StateError("event log must be a JSON array")
    events: list[tuple[int, int, bool]] = []
    last_seq = 0
    for i, item in enumerate(obj):
        if not isinstance(item, Mapping):
            raise StateError(f"event {i} must be a JSON object")
        extra = set(item) - {"seq", "cohort", "toxic"}
        if extra:
            raise StateError(f"event {i} has unknown keys {sorted(extra)}")
        try:
            seq = item["seq"]
            cohort = item["cohort"]
            toxic = item["toxic"]
        except KeyError as exc:
            raise StateError(f"event {i} is missing key {exc}") from exc
        if not isinstance(seq, int) or isinstance(seq, bool) or seq <= last_seq:
            raise StateError(
                f"event {i} has seq {seq!r}; sequence numbers must be "
                f"strictly increasing positive integers"
            )
        if cohort not in (1, 2):
            raise StateError(f"event {i} has cohort {cohort!r}; must be 1 or 2")
        if not isinstance(toxic, bool):
            raise StateError(f"event {i} has non-boolean toxic flag {toxic!r}")
        last_seq = seq
        events.append((seq, cohort, toxic))
    return events


def replay_events(
    cfg: TrialConfig, events: Sequence[tuple[int, int, bool]]
) -> TrialState:
    """Rebuild the trial state by replaying enrollment events in order.

    After each outcome the stopping rule is evaluated and stops are frozen,
    so an event arriving for a cohort that already stopped or completed is
    a protocol violation and raises StateError.
    """
    state = TrialState.initial(cfg)
    for _seq, cohort, toxic in events:
        state = apply_outcome(state, cohort, toxic)
        state = mark_stops(state, decide(cfg, state))
    return state


def boundary_k(cfg: TrialConfig, state: TrialState, cohort: int) -> int | None:
    """Smallest toxicity count that would stop a cohort at its current size.

    The other cohort's observed data is held fixed.  Returns None when no
    count up to the cohort's current sample size reaches the threshold, or
    when the cohort has not enrolled anyone yet.
    """
    if cohort not in (1, 2):
        raise DomainError(f"cohort must be 1 or 2, got {cohort!r}")
    n = state.n(cohort)
    if n == 0:
        return None
    d = state.data
    for k in range(n + 1):
        if cohort == 1:
            trial = DataSummary(d.n1, k, d.n2, d.k2)
        else:
            trial = DataSummary(d.n1, d.k1, d.n2, k)
        if rule_exceedance(cfg, trial, cohort) >= cfg.tau:
            return k
    return None


def project_decisions(
    cfg: TrialConfig, state: TrialState, horizon: int
) -> list[tuple[int, int, tuple[Decision, Decision]]]:
    """Decisions over a grid of hypothetical near-future outcomes.

    Each active cohort is projected ``horizon`` patients ahead; the grid
    enumerates every split (j1, j2) of hypothetical toxicities among them.
    Inactive cohorts stay frozen.  The projection evaluates the rule once
    at the horizon state (it does not re-run intermediate looks), and a
    cohort whose projection reaches its cap is treated as completed there.
    """
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 0:
        raise DomainError(f"horizon must be a nonnegative integer, got {horizon!r}")
    h1 = horizon if state.is_active(1) else 0
    h2 = horizon if state.is_active(2) else 0
    if state.n(1) + h1 > state.max_n1 or state.n(2) + h2 > state.max_n2:
        raise DomainError(
            f"horizon {horizon} exceeds the remaining capacity of an active cohort"
        )
    d = state.data
    cells = []
    for j1 in range(h1 + 1):
        for j2 in range(h2 + 1):
            data = DataSummary(d.n1 + h1, d.k1 + j1, d.n2 + h2, d.k2 + j2)
            status1 = state.status1
            status2 = state.status2
            if status1 == ACTIVE and data.n1 == state.max_n1:
                status1 = COMPLETED
            if status2 == ACTIVE and data.n2 == state.max_n2:
                status2 = COMPLETED
            projected = TrialState(
                data=data,
                max_n1=state.max_n1,
                max_n2=state.max_n2,
                status1=status1,
                status2=status2,
                stop1=state.stop1,
                stop2=state.stop2,
            )
            cells.append((j1, j2, decide(cfg, projected)))
    return cells


@dataclass(frozen=True)
class BoundaryTable:
    """Stopping boundaries for cohort 1 on a symmetric schedule n1 = n2 = n.

    ``rows[k2][n - 1]`` is the smallest k1 that stops cohort 1 at sample
    size n per cohort when the other cohort shows k2 toxicities: an int, or
    None when no count stops, or NOT_APPLICABLE when k2 > n cannot occur.
    """

    rule: str
    n_max: int
    rows: tuple[tuple[object, ...], ...]

    def cell(self, k2: int, n: int):
        return self.rows[k2][n - 1]

    def to_text(self) -> str:
        width = max(3, len(str(self.n_max)) + 1)
        header = "k2".ljust(4) + "".join(
            f"n={n}".rjust(width + 2) for n in range(1, self.n_max + 1)
        )
        lines = [header]
        for k2 in range(self.n_max + 1):
            cells = []
            for n in range(1, self.n_max + 1):
                v = self.rows[k2][n - 1]
                cells.append(("." if v is None or v == NOT_APPLICABLE else str(v)))
            lines.append(
                str(k2).ljust(4) + "".join(c.rjust(width + 2) for c in cells)
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        header = ",".join(f"n={n}" for n in range(1, self.n_max + 1))
        lines = [header]
        for k2 in range(self.n_max + 1):
            cells = []
            for v in self.rows[k2]:
                if v is None:
                    cells.append("none")
                elif v == NOT_APPLICABLE:
                    cells.append("na")
                else:
                    cells.append(str(v))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, rule: str) -> "BoundaryTable":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise DomainError("empty boundary table CSV")
        header = lines[0].split(",")
        n_max = len(header)
        if header != [f"n={n}" for n in range(1, n_max + 1)]:
            raise DomainError("malformed boundary table CSV header")
        if len(lines) != n_max + 2:
            raise DomainError(
                f"boundary table CSV must have {n_max + 1} data rows, "
                f"got {len(lines) - 1}"
            )
        rows = []
        for ln in lines[1:]:
            cells: list[object] = []
            for tok in ln.split(","):
                if tok == "none":
                    cells.append(None)
                elif tok == "na":
                    cells.append(NOT_APPLICABLE)
                else:
                    cells.append(int(tok))
            if len(cells) != n_max:
                raise DomainError("ragged boundary table CSV row")
            rows.append(tuple(cells))
        return cls(rule=rule, n_max=n_max, rows=tuple(rows))

    def to_json(self) -> dict:
        rows = []
        for k2 in range(self.n_max + 1):
            cells = [
                "none" if v is None else v for v in self.rows[k2]
            ]
            rows.append({"k2": k2, "cells": cells})
        return {"rule": self.rule, "nMax": self.n_max, "rows": rows}

    @classmethod
    def from_json(cls, obj: Mapping) -> "BoundaryTable":
        try:
            n_max = int(obj["nMax"])
            rule = str(obj["rule"])
            rows: list[tuple[object, ...]] = [()] * (n_max + 1)
            for row in obj["rows"]:
                cells: list[object] = []
                for v in row["cells"]:
                    if v == "none":
                        cells.append(None)
                    elif v == NOT_APPLICABLE:
                        cells.append(NOT_APPLICABLE)
                    else:
                        cells.append(int(v))
                rows[int(row["k2"])] = tuple(cells)
            return cls(rule=rule, n_max=n_max, rows=tuple(rows))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed boundary table JSON: {exc}") from exc


def boundary_table(cfg: TrialConfig, n_max: int) -> BoundaryTable:
    """Tabulate cohort-1 stopping boundaries for n1 = n2 = n, n = 1..n_max.

    Cell (k2, n) is the smallest k1 whose exceedance reaches tau at the
    state (n, k1, n, k2) under the configured rule.  Note the table is a
    pure function of the rule; the trial's enrollment caps do not bound n.
    """
    if not isinstance(n_max, int) or isinstance(n_max, bool) or n_max < 1:
        raise DomainError(f"n_max must be a positive integer, got {n_max!r}")
    rows = []
    for k2 in range(n_max + 1):
        row: list[object] = []
        for n in range(1, n_max + 1):
            if k2 > n:
                row.append(NOT_APPLICABLE)
                continue
            cell: object = None
            for k1 in range(n + 1):
                if rule_exceedance(cfg, DataSummary(n, k1, n, k2), 1) >= cfg.tau:
                    cell = k1
                    break
            row.append(cell)
        rows.append(tuple(row))
    return BoundaryTable(rule=cfg.rule, n_max=n_max, rows=tuple(rows))
