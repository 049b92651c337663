"""Log-space special functions underpinning the posterior and OC machinery.

All mixture computations carry weights as natural logarithms; ``-inf`` is a
legal log weight and denotes exact zero mass.  The regularised incomplete
beta function is evaluated with a modified Lentz continued fraction so that
survival probabilities are trustworthy at the 1e-12 level near decision
thresholds, where a stop/continue call can hinge on the twelfth digit.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .errors import ConvergenceError, DomainError

__all__ = [
    "LOG_ZERO",
    "log_gamma",
    "log_beta",
    "log_binomial",
    "log_sum_exp",
    "normalize_log_weights",
    "log_beta_binomial_pmf",
    "beta_survival",
]

LOG_ZERO = float("-inf")

# Continued fraction controls for the incomplete beta function.
_CF_TOL = 1e-14
_CF_MAX_ITER = 300
_CF_TINY = 1e-300


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if not x > 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    if math.isinf(x):
        raise DomainError("log_gamma requires finite x")
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    """log B(a, b) for a, b > 0."""
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"log_beta requires a, b > 0, got a={a!r}, b={b!r}")
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def log_binomial(n: int, k: int) -> float:
    """log of the binomial coefficient C(n, k) for integers 0 <= k <= n."""
    if n < 0 or k < 0 or k > n:
        raise DomainError(f"log_binomial requires 0 <= k <= n, got n={n}, k={k}")
    return math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)


def log_sum_exp(values: Iterable[float]) -> float:
    """log(sum(exp(v))) computed stably; returns -inf for all-(-inf) input."""
    vals = list(values)
    if not vals:
        raise DomainError("log_sum_exp of an empty sequence")
    m = max(vals)
    if m == LOG_ZERO:
        return LOG_ZERO
    if math.isinf(m):
        raise DomainError("log_sum_exp requires values bounded above")
    acc = 0.0
    for v in vals:
        if v != LOG_ZERO:
            acc += math.exp(v - m)
    return m + math.log(acc)


def normalize_log_weights(values: Sequence[float]) -> list[float]:
    """Exponentiate and normalise log weights to probabilities summing to 1."""
    total = log_sum_exp(values)
    if total == LOG_ZERO:
        raise DomainError("cannot normalise log weights with zero total mass")
    return [math.exp(v - total) if v != LOG_ZERO else 0.0 for v in values]


def log_beta_binomial_pmf(k: int, n: int, a: float, b: float) -> float:
    """log P(K = k) under the beta-binomial(n, a, b) distribution."""
    if n < 0 or k < 0 or k > n:
        raise DomainError(
            f"log_beta_binomial_pmf requires 0 <= k <= n, got n={n}, k={k}"
        )
    return log_binomial(n, k) + log_beta(a + k, b + n - k) - log_beta(a, b)


def _beta_cf(x: float, a: float, b: float) -> float:
    """Continued fraction for the regularised incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_TOL:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge for "
        f"x={x!r}, a={a!r}, b={b!r}"
    )


def beta_survival(theta0: float, a: float, b: float) -> float:
    """P(X > theta0) for X ~ Beta(a, b), i.e. 1 - I_theta0(a, b).

    The continued fraction is applied on whichever side of the mean keeps
    the directly computed quantity free of cancellation: for
    theta0 > a / (a + b) the survival probability itself is the small
    branch and is returned without forming 1 - (value near 1).
    """
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"beta_survival requires a, b > 0, got a={a!r}, b={b!r}")
    if not 0.0 <= theta0 <= 1.0:
        raise DomainError(f"beta_survival requires 0 <= theta0 <= 1, got {theta0!r}")
    if theta0 == 0.0:
        return 1.0
    if theta0 == 1.0:
        return 0.0
    log_front = (
        a * math.log(theta0) + b * math.log1p(-theta0) - log_beta(a, b)
    )
    if theta0 <= a / (a + b):
        return 1.0 - math.exp(log_front) * _beta_cf(theta0, a, b) / a
    return math.exp(log_front) * _beta_cf(1.0 - theta0, b, a) / b
