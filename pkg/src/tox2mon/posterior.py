"""Exact posterior machinery for the correlated two-cohort toxicity model.

Under the bivariate beta prior the joint posterior of the two toxicity
probabilities given binomial cohort data is a finite mixture of Dirichlet-
induced bivariate betas, and each marginal posterior is a finite mixture of
ordinary betas.  Both expansions are computed in closed form: weights are
assembled in log space from gamma/beta/binomial log factors and normalised
at the end, so no likelihood underflow can occur at realistic sample sizes.

Exceedance probabilities P(theta_i > theta0 | data) follow by applying the
beta survival function componentwise.  Two simpler monitoring rules are
provided for comparison: per-cohort independent beta updating that ignores
the other cohort entirely, and pooled updating that treats both cohorts as
exchangeable draws from a single toxicity probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

from .bivariate_beta import AlphaVector
from .errors import DegeneratePriorError, DomainError
from .numerics import (
    beta_survival,
    log_beta,
    log_binomial,
    log_gamma,
    log_sum_exp,
    normalize_log_weights,
)

__all__ = [
    "DataSummary",
    "BetaMixture",
    "JointBBetaMixture",
    "marginal_posterior",
    "joint_posterior",
    "exceedance_correlated",
    "exceedance_independent",
    "exceedance_pooled",
    "pooled_prior_params",
    "clear_caches",
]

# Mixture components whose log weight trails the maximum by more than this
# are dropped; the discarded mass is below 4e-18 even at the largest
# supported sample sizes.
_LOG_WEIGHT_DROP = 45.0


def _require_cohort(cohort: int) -> None:
    if cohort not in (1, 2):
        raise DomainError(f"cohort must be 1 or 2, got {cohort!r}")


def _require_all_positive(alpha: AlphaVector) -> None:
    if not alpha.all_positive():
        raise DegeneratePriorError(
            "correlated posterior updating requires all four alpha components "
            "positive: every mixture weight contains a gamma factor whose "
            "argument reduces to a bare component parameter"
        )


@dataclass(frozen=True)
class DataSummary:
    """Observed cohort data: n_i patients, k_i toxicities, i = 1, 2."""

    n1: int
    k1: int
    n2: int
    k2: int

    def __post_init__(self) -> None:
        for name in ("n1", "k1", "n2", "k2"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise DomainError(f"{name} must be a nonnegative integer, got {v!r}")
        if self.k1 > self.n1 or self.k2 > self.n2:
            raise DomainError(
                f"toxicity counts cannot exceed sample sizes: "
                f"({self.n1}, {self.k1}, {self.n2}, {self.k2})"
            )

    def to_json(self) -> dict:
        return {"n1": self.n1, "k1": self.k1, "n2": self.n2, "k2": self.k2}

    @classmethod
    def from_json(cls, obj: Mapping) -> "DataSummary":
        try:
            return cls(
                int(obj["n1"]), int(obj["k1"]), int(obj["n2"]), int(obj["k2"])
            )
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed data summary: {exc}") from exc


@dataclass(frozen=True)
class BetaMixture:
    """Finite beta mixture: components (weight, a, b) with weights summing to 1."""

    components: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise DomainError("a beta mixture needs at least one component")
        total = 0.0
        for w, a, b in self.components:
            if w < 0.0:
                raise DomainError(f"mixture weight must be >= 0, got {w!r}")
            if not (a > 0.0 and b > 0.0):
                raise DomainError(f"mixture component requires a, b > 0, got ({a!r}, {b!r})")
            total += w
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"mixture weights must sum to 1, got {total!r}")

    def mean(self) -> float:
        return sum(w * a / (a + b) for w, a, b in self.components)

    def survival(self, theta0: float) -> float:
        """P(theta > theta0) under the mixture."""
        return sum(w * beta_survival(theta0, a, b) for w, a, b in self.components)

    def cdf(self, theta0: float) -> float:
        return 1.0 - self.survival(theta0)

    def to_json(self) -> list[dict]:
        return [{"w": w, "a": a, "b": b} for w, a, b in self.components]

    @classmethod
    def from_json(cls, obj) -> "BetaMixture":
        try:
            comps = tuple(
                (float(c["w"]), float(c["a"]), float(c["b"])) for c in obj
            )
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed beta mixture: {exc}") from exc
        return cls(comps)


@dataclass(frozen=True)
class JointBBetaMixture:
    """Mixture of Dirichlet-component bivariate betas: (weight, alpha) pairs."""

    components: tuple[tuple[float, AlphaVector], ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise DomainError("a joint mixture needs at least one component")
        total = sum(w for w, _ in self.components)
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"mixture weights must sum to 1, got {total!r}")

    def collapse(self, cohort: int) -> BetaMixture:
        """Marginal beta mixture of one cohort's toxicity probability.

        Each Dirichlet component contributes its beta marginal; components
        sharing the same marginal parameters are merged.
        """
        _require_cohort(cohort)
        grouped: dict[tuple[float, float], list[float]] = {}
        params: dict[tuple[float, float], tuple[float, float]] = {}
        for w, av in self.components:
            a, b = (av.a1p, av.a0p) if cohort == 1 else (av.ap1, av.ap0)
            key = (round(a, 9), round(b, 9))
            grouped.setdefault(key, []).append(w)
            params.setdefault(key, (a, b))
        comps = tuple(
            (math.fsum(ws), params[key][0], params[key][1])
            for key, ws in sorted(grouped.items())
        )
        return BetaMixture(comps)


@lru_cache(maxsize=100000)
def _g1_inner(alpha: AlphaVector, n2: int, k2: int) -> tuple[float, ...]:
    """Log inner sums of the cohort-1 marginal weights, indexed by y = 0..n2.

    Entry y collects, over the latent split y2 of the other cohort's
    non-toxic outcomes, the binomial choice factors and the two beta
    integrals left after integrating the latent Dirichlet cells out of the
    joint kernel.
    """
    out = []
    for y in range(n2 + 1):
        terms = [
            log_binomial(k2, y - y2)
            + log_binomial(n2 - k2, y2)
            + log_beta(alpha.a00 + y2, alpha.a01 + y - y2)
            + log_beta(alpha.a10 + n2 - k2 - y2, alpha.a11 + k2 - y + y2)
            for y2 in range(max(0, y - k2), min(n2 - k2, y) + 1)
        ]
        out.append(log_sum_exp(terms))
    return tuple(out)


@lru_cache(maxsize=100000)
def _g2_inner(alpha: AlphaVector, n1: int, k1: int) -> tuple[float, ...]:
    """Log inner sums of the cohort-2 marginal weights, indexed by x = 0..n1."""
    out = []
    for x in range(n1 + 1):
        terms = [
            log_binomial(k1, x - x2)
            + log_binomial(n1 - k1, x2)
            + log_beta(alpha.a00 + x2, alpha.a10 + x - x2)
            + log_beta(alpha.a01 + n1 - k1 - x2, alpha.a11 + k1 - x + x2)
            for x2 in range(max(0, x - k1), min(n1 - k1, x) + 1)
        ]
        out.append(log_sum_exp(terms))
    return tuple(out)


def _build_mixture(
    log_weights: list[float], params: list[tuple[float, float]]
) -> BetaMixture:
    m = max(log_weights)
    kept = [i for i, lw in enumerate(log_weights) if lw >= m - _LOG_WEIGHT_DROP]
    weights = normalize_log_weights([log_weights[i] for i in kept])
    return BetaMixture(
        tuple((w, params[i][0], params[i][1]) for w, i in zip(weights, kept))
    )


@lru_cache(maxsize=200000)
def _marginal_cached(
    alpha: AlphaVector, n1: int, k1: int, n2: int, k2: int, cohort: int
) -> BetaMixture:
    if cohort == 1:
        inner = _g1_inner(alpha, n2, k2)
        a_base, b_base = alpha.a1p, alpha.a0p
        log_weights = [
            log_gamma(a_base + k1 + n2 - y)
            + log_gamma(b_base + n1 - k1 + y)
            + inner[y]
            for y in range(n2 + 1)
        ]
        params = [
            (a_base + k1 + n2 - y, b_base + n1 - k1 + y) for y in range(n2 + 1)
        ]
    else:
        inner = _g2_inner(alpha, n1, k1)
        a_base, b_base = alpha.ap1, alpha.ap0
        log_weights = [
            log_gamma(a_base + k2 + n1 - x)
            + log_gamma(b_base + n2 - k2 + x)
            + inner[x]
            for x in range(n1 + 1)
        ]
        params = [
            (a_base + k2 + n1 - x, b_base + n2 - k2 + x) for x in range(n1 + 1)
        ]
    return _build_mixture(log_weights, params)


def marginal_posterior(
    prior: AlphaVector, data: DataSummary, cohort: int
) -> BetaMixture:
    """Posterior beta mixture of one cohort's toxicity probability.

    The other cohort's data enters through the mixture weights, which is
    where the borrowing of strength between cohorts happens.  Results are
    memoized on (prior, data, cohort).
    """
    _require_cohort(cohort)
    _require_all_positive(prior)
    return _marginal_cached(prior, data.n1, data.k1, data.n2, data.k2, cohort)


def joint_posterior(prior: AlphaVector, data: DataSummary) -> JointBBetaMixture:
    """Exact joint posterior as a mixture of Dirichlet-component priors.

    Expanding the four binomial likelihood factors over the latent Dirichlet
    cells leaves one conjugate Dirichlet term per allocation of toxic and
    non-toxic outcomes to cells, indexed by (x1, x2, y1, y2).  The component
    count grows as the product of the four outcome-category sizes, so this
    expansion is intended for moderate n1 + n2; monitoring paths use the
    marginal mixtures instead.
    """
    _require_all_positive(prior)
    n1, k1, n2, k2 = data.n1, data.k1, data.n2, data.k2
    log_norm_n = log_gamma(prior.ess + n1 + n2)
    log_weights: list[float] = []
    alphas: list[AlphaVector] = []
    for x1 in range(k1 + 1):
        lw1 = log_binomial(k1, x1)
        for x2 in range(n1 - k1 + 1):
            lw2 = lw1 + log_binomial(n1 - k1, x2)
            for y1 in range(k2 + 1):
                lw3 = lw2 + log_binomial(k2, y1)
                for y2 in range(n2 - k2 + 1):
                    z11 = x1 + y1
                    z10 = k1 - x1 + y2
                    z01 = x2 + k2 - y1
                    z00 = n1 - k1 - x2 + n2 - k2 - y2
                    av = AlphaVector(
                        prior.a11 + z11,
                        prior.a10 + z10,
                        prior.a01 + z01,
                        prior.a00 + z00,
                    )
                    lw = (
                        lw3
                        + log_binomial(n2 - k2, y2)
                        + log_gamma(av.a11)
                        + log_gamma(av.a10)
                        + log_gamma(av.a01)
                        + log_gamma(av.a00)
                        - log_norm_n
                    )
                    log_weights.append(lw)
                    alphas.append(av)
    weights = normalize_log_weights(log_weights)
    return JointBBetaMixture(tuple(zip(weights, alphas)))


def exceedance_correlated(
    prior: AlphaVector, data: DataSummary, theta0: float, cohort: int
) -> float:
    """P(theta_cohort > theta0 | data) under the correlated model."""
    if not 0.0 < theta0 < 1.0:
        raise DomainError(f"theta0 must lie strictly in (0, 1), got {theta0!r}")
    return marginal_posterior(prior, data, cohort).survival(theta0)


def exceedance_independent(
    prior: AlphaVector, n: int, k: int, theta0: float, cohort: int
) -> float:
    """P(theta_cohort > theta0 | n, k) ignoring the other cohort.

    The cohort's beta marginal of the joint prior is updated with its own
    counts only.  theta0 = 0 and theta0 = 1 are legal edges (survival 1
    and 0 respectively).
    """
    _require_cohort(cohort)
    if not isinstance(n, int) or not isinstance(k, int) or n < 0 or not 0 <= k <= n:
        raise DomainError(f"need integers 0 <= k <= n, got n={n!r}, k={k!r}")
    a, b = (prior.a1p, prior.a0p) if cohort == 1 else (prior.ap1, prior.ap0)
    if not (a > 0.0 and b > 0.0):
        raise DegeneratePriorError(
            "independent updating requires a nondegenerate beta marginal"
        )
    return beta_survival(theta0, a + k, b + n - k)


def pooled_prior_params(prior: AlphaVector) -> tuple[float, float]:
    """Beta parameters of the pooled prior: the average of the two marginals.

    Averaging keeps the effective prior sample size equal to that of the
    joint prior rather than doubling it; the result does not depend on how
    prior mass is split between concordant and discordant cells.
    """
    a = prior.a11 + 0.5 * (prior.a10 + prior.a01)
    b = prior.a00 + 0.5 * (prior.a10 + prior.a01)
    if not (a > 0.0 and b > 0.0):
        raise DegeneratePriorError(
            "pooled updating requires a nondegenerate pooled beta prior"
        )
    return a, b


def exceedance_pooled(prior: AlphaVector, data: DataSummary, theta0: float) -> float:
    """P(theta > theta0 | pooled data) treating both cohorts as one arm."""
    a, b = pooled_prior_params(prior)
    n = data.n1 + data.n2
    k = data.k1 + data.k2
    return beta_survival(theta0, a + k, b + n - k)


def clear_caches() -> None:
    """Drop all memoized posterior mixtures (mainly for tests and benchmarks)."""
    _marginal_cached.cache_clear()
    _g1_inner.cache_clear()
    _g2_inner.cache_clear()
