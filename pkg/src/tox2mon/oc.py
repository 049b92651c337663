"""Operating characteristics of the monitoring rules.

Frequentist properties (stop probabilities, expected enrollment, expected
toxicity counts) are computed two independent ways:

* ``exact_oc`` propagates the full probability mass of the trial through
  the decision process as an absorbing chain.  While both cohorts are
  active the joint toxicity-count mass M_n(k1, k2) is walked one patient
  per cohort at a time; once one cohort stops or completes, each surviving
  profile (frozen cohort's record, survivor's count) is walked as a
  one-dimensional chain to its own cap.  No sampling error.

* ``mc_simulate`` simulates whole trials with a vectorised generator and
  reports means with standard errors.  It shares the thresholded decision
  tables with the exact engine, so the two must agree to Monte Carlo
  accuracy; disagreement indicates a defect in one of the walks.

Stopping is evaluated after every enrolled patient while a cohort is
active; a cohort reaching its cap completes and cannot stop, so all stop
events happen strictly before the cap (see the monitoring module).

Exceedance tables are cached per configuration (excluding tau), which is
what makes threshold calibration cheap: ``calibrate_tau`` re-thresholds
the same tables while searching the tau grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .bivariate_beta import AlphaVector
from .errors import (
    ConvergenceError,
    DomainError,
    ResourceLimitError,
)
from .monitoring import TrialConfig
from .numerics import beta_survival, log_gamma
from .posterior import _g1_inner, _g2_inner, pooled_prior_params

__all__ = [
    "MAX_EXACT_N",
    "TAU_GRID_LO",
    "TAU_GRID_HI",
    "TAU_GRID_STEP",
    "TrueToxicity",
    "OCResult",
    "MCResult",
    "CalibrationResult",
    "binomial_pmf",
    "exact_oc",
    "oc_grid",
    "mc_simulate",
    "type_I_error",
    "calibrate_tau",
]

MAX_EXACT_N = 60

TAU_GRID_LO = 0.5
TAU_GRID_HI = 0.9999
TAU_GRID_STEP = 1e-4

_MC_CHUNK = 8192

# Conditional expectations are reported as undefined below this mass.
_MIN_CONDITIONING_MASS = 1e-12


@dataclass(frozen=True)
class TrueToxicity:
    """Assumed true per-cohort toxicity probabilities for OC evaluation."""

    theta1: float
    theta2: float

    def __post_init__(self) -> None:
        for name in ("theta1", "theta2"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")


@dataclass(frozen=True)
class OCResult:
    """Operating characteristics of one rule at one true toxicity pair.

    Stop probabilities are probabilities of ever stopping the cohort for
    toxicity (necessarily before its cap).  The events-at-stop fields are
    the expected toxicity count in a cohort at the moment it stops,
    conditional on it stopping; they are None when the conditioning
    probability is (numerically) zero.
    """

    stop_prob1: float
    stop_prob2: float
    expected_enrolled1: float
    expected_enrolled2: float
    expected_events_total: float
    expected_events_at_stop1: float | None
    expected_events_at_stop2: float | None

    def to_json(self) -> dict:
        return {
            "stopProb1": self.stop_prob1,
            "stopProb2": self.stop_prob2,
            "expectedEnrolled1": self.expected_enrolled1,
            "expectedEnrolled2": self.expected_enrolled2,
            "expectedEventsTotal": self.expected_events_total,
            "expectedEventsAtEarlyStop1": self.expected_events_at_stop1,
            "expectedEventsAtEarlyStop2": self.expected_events_at_stop2,
        }


@dataclass(frozen=True)
class MCResult:
    """Monte Carlo estimates with standard errors, field for field."""

    estimate: OCResult
    stderr: OCResult
    reps: int
    seed: int

    def to_json(self) -> dict:
        return {
            "estimate": self.estimate.to_json(),
            "stderr": self.stderr.to_json(),
            "reps": self.reps,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class CalibrationResult:
    """Smallest grid threshold meeting a type I error target."""

    tau: float
    achieved_alpha: float
    target_alpha: float

    def to_json(self) -> dict:
        return {
            "tau": self.tau,
            "achievedAlpha": self.achieved_alpha,
            "targetAlpha": self.target_alpha,
        }


def binomial_pmf(n: int, theta: float) -> np.ndarray:
    """Binomial(n, theta) pmf over k = 0..n via the Pascal-type recursion.

    P(k | m + 1) = theta P(k - 1 | m) + (1 - theta) P(k | m), seeded with
    P(0 | 0) = 1.  Every value is a sum of nonnegative products, so the
    vector is stable and sums to 1 to machine precision.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise DomainError(f"n must be a nonnegative integer, got {n!r}")
    if not (isinstance(theta, (int, float)) and 0.0 <= theta <= 1.0):
        raise DomainError(f"theta must lie in [0, 1], got {theta!r}")
    p = np.zeros(n + 1)
    p[0] = 1.0
    for m in range(n):
        nxt = np.zeros(n + 1)
        nxt[: m + 1] = (1.0 - theta) * p[: m + 1]
        nxt[1 : m + 2] += theta * p[: m + 1]
        p = nxt
    return p


class _CorrEngine:
    """Vectorised correlated-rule exceedance blocks for one cohort.

    A block (n_own, n_other) holds the cohort's exceedance probability for
    every count pair (k_own, k_other).  The gamma log factors and the beta
    survival values are precomputed on the lattice of reachable posterior
    parameters; the per-(k_other) inner sums are shared with the scalar
    posterior path through its memoized helpers.
    """

    def __init__(
        self,
        alpha: AlphaVector,
        cohort: int,
        theta0: float,
        n_own_max: int,
        n_other_max: int,
    ):
        self._alpha = alpha
        self._cohort = cohort
        if cohort == 1:
            a, b = alpha.a1p, alpha.a0p
            self._inner: Callable[[AlphaVector, int, int], tuple] = _g1_inner
        else:
            a, b = alpha.ap1, alpha.ap0
            self._inner = _g2_inner
        imax = n_own_max + n_other_max
        self._lga = np.array([log_gamma(a + i) for i in range(imax + 1)])
        self._lgb = np.array([log_gamma(b + j) for j in range(imax + 1)])
        surv = np.empty((imax + 1, imax + 1))
        for i in range(imax + 1):
            for j in range(imax + 1):
                surv[i, j] = beta_survival(theta0, a + i, b + j)
        self._surv = surv

    def block(self, n_own: int, n_other: int) -> np.ndarray:
        """(n_own + 1, n_other + 1) exceedance array indexed [k_own, k_other]."""
        out = np.empty((n_own + 1, n_other + 1))
        k = np.arange(n_own + 1)[:, None]
        y = np.arange(n_other + 1)[None, :]
        ia = k + (n_other - y)
        ib = (n_own - k) + y
        base = self._lga[ia] + self._lgb[ib]
        for k_oth in range(n_other + 1):
            inner = np.asarray(self._inner(self._alpha, n_other, k_oth))
            logw = base + inner[np.newaxis, :]
            m = logw.max(axis=1, keepdims=True)
            w = np.exp(logw - m)
            w /= w.sum(axis=1, keepdims=True)
            out[:, k_oth] = (w * self._surv[ia, ib]).sum(axis=1)
        return out


class _OCTables:
    """Per-configuration exceedance tables, lazily built and tau-free.

    ``stop_matrix(cohort, n1, n2, tau)`` thresholds the cached float
    exceedance values, so sweeping tau (calibration) costs only boolean
    comparisons after the first build.
    """

    def __init__(self, alpha: AlphaVector, cfg: TrialConfig):
        self.rule = cfg.rule
        self._n1_max = cfg.max_n1
        self._n2_max = cfg.max_n2
        self._alpha = alpha
        self._cache: dict[tuple[int, int, int], np.ndarray] = {}
        if cfg.rule == "correlated":
            self._eng1 = _CorrEngine(
                alpha, 1, cfg.theta01, cfg.max_n1, cfg.max_n2
            )
            self._eng2 = _CorrEngine(
                alpha, 2, cfg.theta02, cfg.max_n2, cfg.max_n1
            )
        elif cfg.rule == "independent":
            self._theta0 = (cfg.theta01, cfg.theta02)
            self._marg = ((alpha.a1p, alpha.a0p), (alpha.ap1, alpha.ap0))
        else:
            self._theta0 = (cfg.theta01, cfg.theta02)
            self._pooled = pooled_prior_params(alpha)

    def exceedance(self, cohort: int, n1: int, n2: int) -> np.ndarray:
        """Exceedance of `cohort` on the (k1, k2) grid at sizes (n1, n2)."""
        key = (cohort, n1, n2)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.rule == "correlated":
            if cohort == 1:
                arr = self._eng1.block(n1, n2)
            else:
                arr = self._eng2.block(n2, n1).T
        elif self.rule == "independent":
            a, b = self._marg[cohort - 1]
            theta0 = self._theta0[cohort - 1]
            if cohort == 1:
                col = np.array(
                    [beta_survival(theta0, a + k, b + n1 - k) for k in range(n1 + 1)]
                )
                arr = np.repeat(col[:, None], n2 + 1, axis=1)
            else:
                row = np.array(
                    [beta_survival(theta0, a + k, b + n2 - k) for k in range(n2 + 1)]
                )
                arr = np.repeat(row[None, :], n1 + 1, axis=0)
        else:
            a, b = self._pooled
            theta0 = self._theta0[cohort - 1]
            m = n1 + n2
            totals = np.array(
                [beta_survival(theta0, a + k, b + m - k) for k in range(m + 1)]
            )
            arr = totals[np.add.outer(np.arange(n1 + 1), np.arange(n2 + 1))]
        self._cache[key] = arr
        return arr

    def stop_matrix(self, cohort: int, n1: int, n2: int, tau: float) -> np.ndarray:
        return self.exceedance(cohort, n1, n2) >= tau


@lru_cache(maxsize=6)
def _tables_cached(
    alpha_key: tuple[float, float, float, float],
    theta01: float,
    theta02: float,
    rule: str,
    max_n1: int,
    max_n2: int,
) -> _OCTables:
    alpha = AlphaVector(*alpha_key)
    cfg = TrialConfig(
        theta01=theta01,
        theta02=theta02,
        tau=0.5,
        max_n1=max_n1,
        max_n2=max_n2,
        prior=alpha,
        rule=rule,
    )
    return _OCTables(alpha, cfg)


def _tables_for(cfg: TrialConfig) -> _OCTables:
    alpha = cfg.alpha()
    return _tables_cached(
        (alpha.a11, alpha.a10, alpha.a01, alpha.a00),
        cfg.theta01,
        cfg.theta02,
        cfg.rule,
        cfg.max_n1,
        cfg.max_n2,
    )


class _Accumulator:
    __slots__ = (
        "p_stop1",
        "p_stop2",
        "sum_n1",
        "sum_n2",
        "sum_events",
        "sum_k_stop1",
        "sum_k_stop2",
        "absorbed",
    )

    def __init__(self) -> None:
        self.p_stop1 = 0.0
        self.p_stop2 = 0.0
        self.sum_n1 = 0.0
        self.sum_n2 = 0.0
        self.sum_events = 0.0
        self.sum_k_stop1 = 0.0
        self.sum_k_stop2 = 0.0
        self.absorbed = 0.0


def _check_caps(cfg: TrialConfig) -> None:
    if max(cfg.max_n1, cfg.max_n2) > MAX_EXACT_N:
        raise ResourceLimitError(
            f"operating characteristics are capped at per-cohort sample "
            f"sizes of {MAX_EXACT_N}; got maxN1={cfg.max_n1}, maxN2={cfg.max_n2}"
        )


def exact_oc(
    cfg: TrialConfig,
    truth: TrueToxicity,
    mass_audit: list | None = None,
) -> OCResult:
    """Exact operating characteristics by absorbing-chain mass propagation.

    The schedule enrolls one patient per active cohort per step, so the
    cohorts stay in lockstep while both are active; unequal caps are
    supported, with the smaller cohort completing first and the larger
    continuing alone.  When ``mass_audit`` is a list it receives
    (phase, step, total-mass deviation) tuples so callers can verify mass
    conservation step by step.
    """
    if not isinstance(truth, TrueToxicity):
        raise DomainError("truth must be a TrueToxicity")
    _check_caps(cfg)
    tables = _tables_for(cfg)
    tau = cfg.tau
    n1_cap, n2_cap = cfg.max_n1, cfg.max_n2
    p1, p2 = truth.theta1, truth.theta2
    q1, q2 = 1.0 - p1, 1.0 - p2

    acc = _Accumulator()
    # Survivor profiles: frozen other-cohort record -> mass over survivor counts.
    launches1: dict[tuple[int, int], np.ndarray] = {}  # (n2_frozen, k2_frozen) -> mass[k1]
    launches2: dict[tuple[int, int], np.ndarray] = {}  # (n1_frozen, k1_frozen) -> mass[k2]
    pending = 0.0

    def audit(phase: str, step: int, active: float) -> None:
        if mass_audit is not None:
            mass_audit.append(
                (phase, step, acc.absorbed + active + pending - 1.0)
            )

    def absorb_final(mass2d, n1_fin, k1_grid, n2_fin, k2_grid, stop1, stop2):
        s = float(mass2d.sum())
        if s == 0.0:
            return
        acc.sum_n1 += n1_fin * s
        acc.sum_n2 += n2_fin * s
        acc.sum_events += float((mass2d * (k1_grid + k2_grid)).sum())
        if stop1:
            acc.p_stop1 += s
            acc.sum_k_stop1 += float((mass2d * k1_grid).sum())
        if stop2:
            acc.p_stop2 += s
            acc.sum_k_stop2 += float((mass2d * k2_grid).sum())
        acc.absorbed += s

    # Phase 1: both cohorts enroll in lockstep.
    n_lock = min(n1_cap, n2_cap)
    M = np.ones((1, 1))
    for n in range(n_lock):
        t = n + 1
        grown = np.zeros((t + 1, t + 1))
        grown[:t, :t] += M * (q1 * q2)
        grown[1:, :t] += M * (p1 * q2)
        grown[:t, 1:] += M * (q1 * p2)
        grown[1:, 1:] += M * (p1 * p2)
        k1g = np.arange(t + 1)[:, None]
        k2g = np.arange(t + 1)[None, :]
        false_block = np.zeros((t + 1, t + 1), dtype=bool)
        s1 = tables.stop_matrix(1, t, t, tau) if t < n1_cap else false_block
        s2 = tables.stop_matrix(2, t, t, tau) if t < n2_cap else false_block

        absorb_final(grown * (s1 & s2), t, k1g, t, k2g, True, True)

        only1 = grown * (s1 & ~s2)
        s = float(only1.sum())
        if s > 0.0:
            acc.p_stop1 += s
            acc.sum_n1 += t * s
            acc.sum_k_stop1 += float((only1 * k1g).sum())
            if t < n2_cap:
                for k1 in range(t + 1):
                    row = only1[k1]
                    rs = float(row.sum())
                    if rs > 0.0:
                        vec = launches2.setdefault((t, k1), np.zeros(n2_cap + 1))
                        vec[: t + 1] += row
                        pending += rs
            else:
                acc.sum_n2 += t * s
                acc.sum_events += float((only1 * (k1g + k2g)).sum())
                acc.absorbed += s

        only2 = grown * (~s1 & s2)
        s = float(only2.sum())
        if s > 0.0:
            acc.p_stop2 += s
            acc.sum_n2 += t * s
            acc.sum_k_stop2 += float((only2 * k2g).sum())
            if t < n1_cap:
                for k2 in range(t + 1):
                    col = only2[:, k2]
                    cs = float(col.sum())
                    if cs > 0.0:
                        vec = launches1.setdefault((t, k2), np.zeros(n1_cap + 1))
                        vec[: t + 1] += col
                        pending += cs
            else:
                acc.sum_n1 += t * s
                acc.sum_events += float((only2 * (k1g + k2g)).sum())
                acc.absorbed += s

        rest = grown * ~(s1 | s2)
        if t == n_lock:
            if n1_cap == n2_cap:
                absorb_final(rest, t, k1g, t, k2g, False, False)
            elif n1_cap < n2_cap:
                # Cohort 1 completes; cohort 2 carries on alone.
                s = float(rest.sum())
                acc.sum_n1 += t * s
                for k1 in range(t + 1):
                    row = rest[k1]
                    rs = float(row.sum())
                    if rs > 0.0:
                        vec = launches2.setdefault((t, k1), np.zeros(n2_cap + 1))
                        vec[: t + 1] += row
                        pending += rs
            else:
                s = float(rest.sum())
                acc.sum_n2 += t * s
                for k2 in range(t + 1):
                    col = rest[:, k2]
                    cs = float(col.sum())
                    if cs > 0.0:
                        vec = launches1.setdefault((t, k2), np.zeros(n1_cap + 1))
                        vec[: t + 1] += col
                        pending += cs
            M = np.zeros((1, 1))
            audit("lockstep", t, 0.0)
        else:
            M = rest
            audit("lockstep", t, float(M.sum()))

    # Phase 2: one survivor walks alone against a frozen record.
    kvec1 = np.arange(n1_cap + 1, dtype=float)
    for (n2f, k2f), vec in sorted(launches1.items()):
        v = vec.copy()
        for t in range(n2f + 1, n1_cap + 1):
            nxt = q1 * v
            nxt[1:] += p1 * v[:-1]
            v = nxt
            if t < n1_cap:
                srow = tables.stop_matrix(1, t, n2f, tau)[:, k2f]
                mask = np.zeros(n1_cap + 1, dtype=bool)
                mask[: t + 1] = srow
                stopped = v * mask
                s = float(stopped.sum())
                if s > 0.0:
                    acc.p_stop1 += s
                    acc.sum_n1 += t * s
                    acc.sum_k_stop1 += float((stopped * kvec1).sum())
                    acc.sum_events += float((stopped * (kvec1 + k2f)).sum())
                    acc.absorbed += s
                    pending -= s
                    v = v * ~mask
        s = float(v.sum())
        if s > 0.0:
            acc.sum_n1 += n1_cap * s
            acc.sum_events += float((v * (kvec1 + k2f)).sum())
            acc.absorbed += s
            pending -= s
        audit("survivor1", n2f, 0.0)

    kvec2 = np.arange(n2_cap + 1, dtype=float)
    for (n1f, k1f), vec in sorted(launches2.items()):
        v = vec.copy()
        for t in range(n1f + 1, n2_cap + 1):
            nxt = q2 * v
            nxt[1:] += p2 * v[:-1]
            v = nxt
            if t < n2_cap:
                srow = tables.stop_matrix(2, n1f, t, tau)[k1f, :]
                mask = np.zeros(n2_cap + 1, dtype=bool)
                mask[: t + 1] = srow
                stopped = v * mask
                s = float(stopped.sum())
                if s > 0.0:
                    acc.p_stop2 += s
                    acc.sum_n2 += t * s
                    acc.sum_k_stop2 += float((stopped * kvec2).sum())
                    acc.sum_events += float((stopped * (kvec2 + k1f)).sum())
                    acc.absorbed += s
                    pending -= s
                    v = v * ~mask
        s = float(v.sum())
        if s > 0.0:
            acc.sum_n2 += n2_cap * s
            acc.sum_events += float((v * (kvec2 + k1f)).sum())
            acc.absorbed += s
            pending -= s
        audit("survivor2", n1f, 0.0)

    if abs(acc.absorbed - 1.0) > 1e-9:
        raise ConvergenceError(
            f"probability mass was not conserved: absorbed {acc.absorbed!r}"
        )

    def conditional(total: float, prob: float) -> float | None:
        if prob < _MIN_CONDITIONING_MASS:
            return None
        return total / prob

    return OCResult(
        stop_prob1=acc.p_stop1,
        stop_prob2=acc.p_stop2,
        expected_enrolled1=acc.sum_n1,
        expected_enrolled2=acc.sum_n2,
        expected_events_total=acc.sum_events,
        expected_events_at_stop1=conditional(acc.sum_k_stop1, acc.p_stop1),
        expected_events_at_stop2=conditional(acc.sum_k_stop2, acc.p_stop2),
    )


def oc_grid(
    cfg: TrialConfig,
    theta1_values: list[float],
    theta2_values: list[float],
) -> list[tuple[TrueToxicity, OCResult]]:
    """exact_oc over the Cartesian grid of true toxicity values."""
    if not theta1_values or not theta2_values:
        raise DomainError("theta grids must be nonempty")
    out = []
    for t1 in theta1_values:
        for t2 in theta2_values:
            truth = TrueToxicity(t1, t2)
            out.append((truth, exact_oc(cfg, truth)))
    return out


def _stop_cubes(
    tables: _OCTables, tau: float, n1_cap: int, n2_cap: int
) -> tuple[np.ndarray, np.ndarray]:
    """Dense stop-decision lookups for the simulator.

    S1[n1, k1, n2, k2] answers "does cohort 1 stop here?".  Only states the
    lockstep schedule can reach are filled: cohort 1 is never behind
    cohort 2 when it is checked (and vice versa), and a cohort at its cap
    is never checked.
    """
    s1 = np.zeros((n1_cap + 1, n1_cap + 1, n2_cap + 1, n2_cap + 1), dtype=bool)
    for n1 in range(1, n1_cap):
        for n2 in range(1, min(n1, n2_cap) + 1):
            s1[n1, : n1 + 1, n2, : n2 + 1] = tables.stop_matrix(1, n1, n2, tau)
    s2 = np.zeros((n1_cap + 1, n1_cap + 1, n2_cap + 1, n2_cap + 1), dtype=bool)
    for n2 in range(1, n2_cap):
        for n1 in range(1, min(n2, n1_cap) + 1):
            s2[n1, : n1 + 1, n2, : n2 + 1] = tables.stop_matrix(2, n1, n2, tau)
    return s1, s2


def _simulate_chunk(
    m: int,
    rng: np.random.Generator,
    s1_cube: np.ndarray,
    s2_cube: np.ndarray,
    n1_cap: int,
    n2_cap: int,
    theta1: float,
    theta2: float,
):
    n1 = np.zeros(m, dtype=np.int64)
    k1 = np.zeros(m, dtype=np.int64)
    n2 = np.zeros(m, dtype=np.int64)
    k2 = np.zeros(m, dtype=np.int64)
    alive1 = np.ones(m, dtype=bool)
    alive2 = np.ones(m, dtype=bool)
    stopped1 = np.zeros(m, dtype=bool)
    stopped2 = np.zeros(m, dtype=bool)
    for _ in range(max(n1_cap, n2_cap)):
        if not (alive1.any() or alive2.any()):
            break
        tox1 = rng.random(m) < theta1
        tox2 = rng.random(m) < theta2
        n1[alive1] += 1
        k1[alive1 & tox1] += 1
        n2[alive2] += 1
        k2[alive2 & tox2] += 1
        check1 = alive1 & (n1 < n1_cap)
        if check1.any():
            hit = np.zeros(m, dtype=bool)
            hit[check1] = s1_cube[n1[check1], k1[check1], n2[check1], k2[check1]]
            stopped1 |= hit
            alive1 &= ~hit
        check2 = alive2 & (n2 < n2_cap)
        if check2.any():
            hit = np.zeros(m, dtype=bool)
            hit[check2] = s2_cube[n1[check2], k1[check2], n2[check2], k2[check2]]
            stopped2 |= hit
            alive2 &= ~hit
        alive1 &= n1 < n1_cap
        alive2 &= n2 < n2_cap
    return stopped1, stopped2, n1, n2, k1, k2


class _Welford:
    """Streaming sum / sum-of-squares accumulation for one statistic."""

    __slots__ = ("count", "total", "total_sq")

    def __init__(self) -> None:
        self.count = 0
        self.total = 0.0
        self.total_sq = 0.0

    def add(self, values: np.ndarray) -> None:
        self.count += values.size
        self.total += float(values.sum())
        self.total_sq += float((values.astype(float) ** 2).sum())

    def mean(self) -> float | None:
        if self.count == 0:
            return None
        return self.total / self.count

    def se(self) -> float | None:
        if self.count < 2:
            return None
        mu = self.total / self.count
        var = max(0.0, (self.total_sq - self.count * mu * mu) / (self.count - 1))
        return math.sqrt(var / self.count)


def mc_simulate(
    cfg: TrialConfig, truth: TrueToxicity, reps: int, seed: int
) -> MCResult:
    """Monte Carlo operating characteristics with per-field standard errors.

    Replications are partitioned into fixed-size chunks, each driven by a
    child of SeedSequence(seed); results are therefore reproducible and
    independent of how chunks would be distributed across workers.
    """
    if not isinstance(reps, int) or isinstance(reps, bool) or reps < 1:
        raise DomainError(f"reps must be a positive integer, got {reps!r}")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise DomainError(f"seed must be a nonnegative integer, got {seed!r}")
    if not isinstance(truth, TrueToxicity):
        raise DomainError("truth must be a TrueToxicity")
    _check_caps(cfg)
    tables = _tables_for(cfg)
    s1_cube, s2_cube = _stop_cubes(tables, cfg.tau, cfg.max_n1, cfg.max_n2)

    stats = {
        name: _Welford()
        for name in ("st1", "st2", "n1", "n2", "ktot", "k_at_stop1", "k_at_stop2")
    }
    n_chunks = (reps + _MC_CHUNK - 1) // _MC_CHUNK
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    done = 0
    for child in children:
        m = min(_MC_CHUNK, reps - done)
        done += m
        rng = np.random.Generator(np.random.PCG64(child))
        stopped1, stopped2, n1, n2, k1, k2 = _simulate_chunk(
            m, rng, s1_cube, s2_cube, cfg.max_n1, cfg.max_n2,
            truth.theta1, truth.theta2,
        )
        stats["st1"].add(stopped1)
        stats["st2"].add(stopped2)
        stats["n1"].add(n1)
        stats["n2"].add(n2)
        stats["ktot"].add(k1 + k2)
        stats["k_at_stop1"].add(k1[stopped1])
        stats["k_at_stop2"].add(k2[stopped2])

    estimate = OCResult(
        stop_prob1=stats["st1"].mean() or 0.0,
        stop_prob2=stats["st2"].mean() or 0.0,
        expected_enrolled1=stats["n1"].mean() or 0.0,
        expected_enrolled2=stats["n2"].mean() or 0.0,
        expected_events_total=stats["ktot"].mean() or 0.0,
        expected_events_at_stop1=stats["k_at_stop1"].mean(),
        expected_events_at_stop2=stats["k_at_stop2"].mean(),
    )
    stderr = OCResult(
        stop_prob1=stats["st1"].se() or 0.0,
        stop_prob2=stats["st2"].se() or 0.0,
        expected_enrolled1=stats["n1"].se() or 0.0,
        expected_enrolled2=stats["n2"].se() or 0.0,
        expected_events_total=stats["ktot"].se() or 0.0,
        expected_events_at_stop1=stats["k_at_stop1"].se(),
        expected_events_at_stop2=stats["k_at_stop2"].se(),
    )
    return MCResult(estimate=estimate, stderr=stderr, reps=reps, seed=seed)


def type_I_error(cfg: TrialConfig, theta2: float | None = None) -> float:
    """P(stop cohort 1) when cohort 1 is exactly at its reference theta01.

    theta2 is the assumed true rate in the other cohort and defaults to the
    configuration's theta02.
    """
    t2 = cfg.theta02 if theta2 is None else theta2
    return exact_oc(cfg, TrueToxicity(cfg.theta01, t2)).stop_prob1


def calibrate_tau(
    cfg: TrialConfig, target_alpha: float, theta2: float | None = None
) -> CalibrationResult:
    """Smallest tau on the 1e-4 grid whose cohort-1 type I error meets target.

    The error rate is a non-increasing step function of tau for these stop
    regions, so the grid is bisected; a short local scan afterwards pins
    the exact boundary index even if tiny non-monotone pockets exist.
    Raises CalibrationInfeasibleError when even the largest grid value
    cannot reach the target.
    """
    from .errors import CalibrationInfeasibleError

    if not (isinstance(target_alpha, (int, float)) and 0.0 < target_alpha < 1.0):
        raise DomainError(
            f"target_alpha must lie strictly in (0, 1), got {target_alpha!r}"
        )
    _check_caps(cfg)
    steps = int(round((TAU_GRID_HI - TAU_GRID_LO) / TAU_GRID_STEP))
    cache: dict[int, float] = {}

    def alpha_at(i: int) -> float:
        if i not in cache:
            tau = TAU_GRID_LO + TAU_GRID_STEP * i
            cache[i] = type_I_error(replace(cfg, tau=tau), theta2)
        return cache[i]

    if alpha_at(steps) > target_alpha:
        raise CalibrationInfeasibleError(
            target_alpha, alpha_at(steps), TAU_GRID_LO + TAU_GRID_STEP * steps
        )
    lo, hi = 0, steps
    while lo < hi:
        mid = (lo + hi) // 2
        if alpha_at(mid) <= target_alpha:
            hi = mid
        else:
            lo = mid + 1
    i = hi
    while i > 0 and alpha_at(i - 1) <= target_alpha:
        i -= 1
    tau = TAU_GRID_LO + TAU_GRID_STEP * i
    return CalibrationResult(
        tau=tau, achieved_alpha=alpha_at(i), target_alpha=target_alpha
    )
