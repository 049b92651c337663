"""Bayesian toxicity monitoring for two-cohort phase II trials.

The package models a pair of cohort-specific toxicity probabilities with a
correlated bivariate beta prior, updates it exactly under binomial data,
and drives sequential stop/continue decisions from posterior exceedance
probabilities.  Exact operating characteristics, Monte Carlo checks,
threshold calibration, a command line interface, and an HTTP service are
built on the same decision kernel.
"""

__version__ = "0.1.0"

from .bivariate_beta import (
    AlphaVector,
    PriorElicitation,
    correlation,
    elicit,
    feasible_rho_range,
    joint_density,
    marginal_params,
    sample_prior,
)
from .errors import (
    CalibrationInfeasibleError,
    ConvergenceError,
    DegenerateDensityError,
    DegeneratePriorError,
    DomainError,
    InfeasibleCorrelationError,
    ResourceLimitError,
    StateError,
    Tox2MonError,
)
from .monitoring import (
    BoundaryTable,
    Decision,
    TrialConfig,
    TrialState,
    apply_outcome,
    boundary_k,
    boundary_table,
    decide,
    parse_event_log,
    project_decisions,
    replay_events,
    rule_exceedance,
)
from .oc import (
    CalibrationResult,
    MCResult,
    OCResult,
    TrueToxicity,
    binomial_pmf,
    calibrate_tau,
    exact_oc,
    mc_simulate,
    oc_grid,
    type_I_error,
)
from .posterior import (
    BetaMixture,
    DataSummary,
    JointBBetaMixture,
    exceedance_correlated,
    exceedance_independent,
    exceedance_pooled,
    joint_posterior,
    marginal_posterior,
    pooled_prior_params,
)

__all__ = [
    "__version__",
    # prior
    "AlphaVector",
    "PriorElicitation",
    "correlation",
    "elicit",
    "feasible_rho_range",
    "joint_density",
    "marginal_params",
    "sample_prior",
    # posterior
    "BetaMixture",
    "DataSummary",
    "JointBBetaMixture",
    "exceedance_correlated",
    "exceedance_independent",
    "exceedance_pooled",
    "joint_posterior",
    "marginal_posterior",
    "pooled_prior_params",
    # monitoring
    "BoundaryTable",
    "Decision",
    "TrialConfig",
    "TrialState",
    "apply_outcome",
    "boundary_k",
    "boundary_table",
    "decide",
    "parse_event_log",
    "project_decisions",
    "replay_events",
    "rule_exceedance",
    # operating characteristics
    "CalibrationResult",
    "MCResult",
    "OCResult",
    "TrueToxicity",
    "binomial_pmf",
    "calibrate_tau",
    "exact_oc",
    "mc_simulate",
    "oc_grid",
    "type_I_error",
    # errors
    "CalibrationInfeasibleError",
    "ConvergenceError",
    "DegenerateDensityError",
    "DegeneratePriorError",
    "DomainError",
    "InfeasibleCorrelationError",
    "ResourceLimitError",
    "StateError",
    "Tox2MonError",
]
