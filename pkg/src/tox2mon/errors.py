"""Exception taxonomy for tox2mon.

Every failure mode that callers are expected to distinguish gets its own
class so the CLI can map them onto exit codes and the HTTP service onto
status codes without string matching.
"""

from __future__ import annotations

__all__ = [
    "Tox2MonError",
    "DomainError",
    "InfeasibleCorrelationError",
    "DegeneratePriorError",
    "DegenerateDensityError",
    "ConvergenceError",
    "StateError",
    "ResourceLimitError",
    "CalibrationInfeasibleError",
]


class Tox2MonError(Exception):
    """Base class for all tox2mon-specific errors."""


class DomainError(Tox2MonError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InfeasibleCorrelationError(DomainError):
    """Requested prior correlation cannot be realised for the given means.

    Carries the closed feasible interval so callers can report it.
    """

    def __init__(self, rho: float, lo: float, hi: float):
        self.rho = rho
        self.lo = lo
        self.hi = hi
        super().__init__(
            f"correlation {rho:.6g} is infeasible for the requested marginal "
            f"means; the feasible interval is [{lo:.6g}, {hi:.6g}]"
        )


class DegeneratePriorError(DomainError):
    """A component parameter of the prior is zero where positivity is required.

    The correlated posterior mixture involves gamma factors evaluated at each
    component parameter, and a zero component always reaches Gamma(0)
    regardless of the observed counts.
    """


class DegenerateDensityError(DomainError):
    """The joint prior density is requested for a prior with a zero component."""


class ConvergenceError(Tox2MonError, ArithmeticError):
    """An iterative numerical routine failed to reach its tolerance."""


class StateError(Tox2MonError, ValueError):
    """A trial state transition or replay violates the monitoring protocol."""


class ResourceLimitError(Tox2MonError, ValueError):
    """A request exceeds a documented computational resource cap."""


class CalibrationInfeasibleError(Tox2MonError, ValueError):
    """No threshold on the calibration grid attains the target error rate.

    Carries the error rate achieved at the largest grid threshold.
    """

    def __init__(self, target: float, achieved_at_max: float, tau_max: float):
        self.target = target
        self.achieved_at_max = achieved_at_max
        self.tau_max = tau_max
        super().__init__(
            f"no threshold up to tau={tau_max:.4f} attains type I error "
            f"<= {target:.6g}; the rate at tau={tau_max:.4f} is "
            f"{achieved_at_max:.6g}"
        )
