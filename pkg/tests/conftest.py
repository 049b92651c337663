"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import random

import pytest

from tox2mon.bivariate_beta import PriorElicitation, feasible_rho_range
from tox2mon.monitoring import TrialConfig

# One line per acceptance criterion, printed in the terminal summary so a
# plain `pytest -v` run always shows the checklist.
_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


def reference_config(rule: str = "correlated", rho: float = 0.5, **overrides) -> TrialConfig:
    """The worked-example design: theta0 = 0.2 both cohorts, tau = 0.98,
    20 + 20 patients, prior means 0.2 with three patients' worth of weight."""
    kwargs = dict(
        theta01=0.2,
        theta02=0.2,
        tau=0.98,
        max_n1=20,
        max_n2=20,
        prior=PriorElicitation(p1=0.2, p2=0.2, ess=3.0, rho=rho),
        rule=rule,
    )
    kwargs.update(overrides)
    return TrialConfig(**kwargs)


def random_feasible_elicitation(rng: random.Random, interior: float = 0.02) -> PriorElicitation:
    """Draw an elicitation whose correlation sits strictly inside the
    feasible interval (by the given relative margin)."""
    p1 = rng.uniform(0.05, 0.95)
    p2 = rng.uniform(0.05, 0.95)
    ess = rng.uniform(0.5, 30.0)
    lo, hi = feasible_rho_range(p1, p2)
    pad = interior * (hi - lo)
    rho = rng.uniform(lo + pad, hi - pad)
    return PriorElicitation(p1=p1, p2=p2, ess=ess, rho=rho)


@pytest.fixture
def reference_cfg() -> TrialConfig:
    return reference_config()
