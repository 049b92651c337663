"""Tests for exact operating characteristics, simulation, and calibration."""

from __future__ import annotations

import math

import numpy as np
import pytest

from tox2mon.bivariate_beta import PriorElicitation
from tox2mon.errors import (
    CalibrationInfeasibleError,
    DomainError,
    ResourceLimitError,
)
from tox2mon.monitoring import TrialConfig
from tox2mon.oc import (
    MAX_EXACT_N,
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

from conftest import reference_config
from oracles import brute_force_oc

_OC_FIELDS = (
    "stop_prob1",
    "stop_prob2",
    "expected_enrolled1",
    "expected_enrolled2",
    "expected_events_total",
)
_CONDITIONAL_FIELDS = ("expected_events_at_stop1", "expected_events_at_stop2")


def assert_oc_close(got: OCResult, want: dict, tol: float) -> None:
    for f in _OC_FIELDS:
        assert getattr(got, f) == pytest.approx(want[f], abs=tol), f
    for f in _CONDITIONAL_FIELDS:
        g, w = getattr(got, f), want[f]
        assert (g is None) == (w is None), f
        if g is not None:
            assert g == pytest.approx(w, abs=tol), f


class TestBinomialPmf:
    def test_matches_closed_form(self):
        for n in (0, 1, 7, 23):
            for theta in (0.0, 0.2, 0.5, 0.97, 1.0):
                pmf = binomial_pmf(n, theta)
                assert pmf.shape == (n + 1,)
                for k in range(n + 1):
                    direct = math.comb(n, k) * theta**k * (1 - theta) ** (n - k)
                    assert pmf[k] == pytest.approx(direct, abs=1e-14)
                assert float(pmf.sum()) == pytest.approx(1.0, abs=1e-13)

    def test_domain(self):
        with pytest.raises(DomainError):
            binomial_pmf(-1, 0.5)
        with pytest.raises(DomainError):
            binomial_pmf(3, 1.2)


class TestExactVersusBruteForce:
    @pytest.mark.parametrize("rule", ["correlated", "independent", "pooled"])
    @pytest.mark.parametrize("caps", [(4, 4), (3, 5), (6, 6)])
    def test_small_designs_exact(self, rule, caps):
        cfg = TrialConfig(
            theta01=0.2,
            theta02=0.2,
            tau=0.8,
            max_n1=caps[0],
            max_n2=caps[1],
            prior=PriorElicitation(p1=0.2, p2=0.25, ess=3.0, rho=0.4),
            rule=rule,
        )
        want = brute_force_oc(cfg, 0.35, 0.15)
        audit: list = []
        got = exact_oc(cfg, TrueToxicity(0.35, 0.15), mass_audit=audit)
        assert_oc_close(got, want, 1e-12)
        assert max(dev for _, _, dev in audit) <= 1e-12

    def test_asymmetric_truth_and_threshold(self):
        cfg = TrialConfig(
            theta01=0.3,
            theta02=0.15,
            tau=0.7,
            max_n1=5,
            max_n2=4,
            prior=PriorElicitation(p1=0.25, p2=0.1, ess=2.0, rho=0.3),
            rule="correlated",
        )
        want = brute_force_oc(cfg, 0.5, 0.05)
        got = exact_oc(cfg, TrueToxicity(0.5, 0.05))
        assert_oc_close(got, want, 1e-12)


class TestExactOC:
    def test_symmetric_design_is_symmetric(self):
        cfg = reference_config()
        res = exact_oc(cfg, TrueToxicity(0.2, 0.2))
        assert res.stop_prob1 == pytest.approx(res.stop_prob2, abs=1e-12)
        assert res.expected_enrolled1 == pytest.approx(
            res.expected_enrolled2, abs=1e-10
        )

    def test_mass_conservation_reference_design(self):
        cfg = reference_config()
        audit: list = []
        exact_oc(cfg, TrueToxicity(0.3, 0.1), mass_audit=audit)
        assert audit, "audit list should be populated"
        assert max(dev for _, _, dev in audit) <= 1e-12

    def test_no_stop_design_edge(self):
        # tau so high the boundary is unreachable: every path runs to the
        # caps, so enrollment is deterministic and events are n * theta.
        cfg = reference_config(tau=0.9999, max_n1=5, max_n2=5)
        res = exact_oc(cfg, TrueToxicity(0.3, 0.25))
        assert res.stop_prob1 == pytest.approx(0.0, abs=1e-15)
        assert res.stop_prob2 == pytest.approx(0.0, abs=1e-15)
        assert res.expected_enrolled1 == pytest.approx(5.0, abs=1e-12)
        assert res.expected_enrolled2 == pytest.approx(5.0, abs=1e-12)
        assert res.expected_events_total == pytest.approx(
            5 * 0.3 + 5 * 0.25, abs=1e-12
        )
        assert res.expected_events_at_stop1 is None
        assert res.expected_events_at_stop2 is None

    def test_extreme_truth_zero_and_one(self):
        cfg = reference_config(max_n1=8, max_n2=8)
        res0 = exact_oc(cfg, TrueToxicity(0.0, 0.0))
        assert res0.stop_prob1 == pytest.approx(0.0, abs=1e-12)
        assert res0.expected_events_total == pytest.approx(0.0, abs=1e-12)
        res1 = exact_oc(cfg, TrueToxicity(1.0, 1.0))
        assert res1.stop_prob1 > 0.99
        assert res1.expected_enrolled1 < 8.0

    def test_resource_cap(self):
        cfg = reference_config(max_n1=MAX_EXACT_N + 1, max_n2=5)
        with pytest.raises(ResourceLimitError):
            exact_oc(cfg, TrueToxicity(0.2, 0.2))

    def test_oc_grid_order_and_shape(self):
        cfg = reference_config(max_n1=6, max_n2=6)
        rows = oc_grid(cfg, [0.1, 0.3], [0.2])
        assert [(t.theta1, t.theta2) for t, _ in rows] == [(0.1, 0.2), (0.3, 0.2)]
        with pytest.raises(DomainError):
            oc_grid(cfg, [], [0.2])

    def test_json_field_names(self):
        cfg = reference_config(max_n1=4, max_n2=4)
        blob = exact_oc(cfg, TrueToxicity(0.2, 0.2)).to_json()
        assert set(blob) == {
            "stopProb1",
            "stopProb2",
            "expectedEnrolled1",
            "expectedEnrolled2",
            "expectedEventsTotal",
            "expectedEventsAtEarlyStop1",
            "expectedEventsAtEarlyStop2",
        }


class TestMonteCarlo:
    def test_reproducible(self):
        cfg = reference_config(max_n1=10, max_n2=10)
        a = mc_simulate(cfg, TrueToxicity(0.3, 0.2), reps=5000, seed=11)
        b = mc_simulate(cfg, TrueToxicity(0.3, 0.2), reps=5000, seed=11)
        assert a == b
        c = mc_simulate(cfg, TrueToxicity(0.3, 0.2), reps=5000, seed=12)
        assert c != a

    def test_agrees_with_exact_within_three_se(self):
        cfg = reference_config()
        truth = TrueToxicity(0.3, 0.1)
        exact = exact_oc(cfg, truth)
        mc = mc_simulate(cfg, truth, reps=40_000, seed=2026)
        for f in _OC_FIELDS:
            se = getattr(mc.stderr, f)
            assert abs(getattr(mc.estimate, f) - getattr(exact, f)) <= 3 * max(
                se, 1e-12
            ), f
        for f in _CONDITIONAL_FIELDS:
            est, se, ref = (
                getattr(mc.estimate, f),
                getattr(mc.stderr, f),
                getattr(exact, f),
            )
            if est is not None and ref is not None and se is not None:
                assert abs(est - ref) <= 4 * max(se, 1e-12), f

    def test_validation(self):
        cfg = reference_config(max_n1=4, max_n2=4)
        with pytest.raises(DomainError):
            mc_simulate(cfg, TrueToxicity(0.2, 0.2), reps=0, seed=1)
        with pytest.raises(DomainError):
            mc_simulate(cfg, TrueToxicity(0.2, 0.2), reps=100, seed=-1)

    def test_json_shape(self):
        cfg = reference_config(max_n1=4, max_n2=4)
        blob = mc_simulate(cfg, TrueToxicity(0.2, 0.2), reps=64, seed=5).to_json()
        assert set(blob) == {"estimate", "stderr", "reps", "seed"}
        assert blob["reps"] == 64


class TestCalibration:
    def test_boundary_property_reference_design(self):
        cfg = reference_config()
        result = calibrate_tau(cfg, target_alpha=0.1)
        assert isinstance(result, CalibrationResult)
        assert result.target_alpha == 0.1
        at = type_I_error(reference_config(tau=result.tau))
        assert at == pytest.approx(result.achieved_alpha, abs=1e-12)
        assert at <= 0.1
        below = type_I_error(reference_config(tau=result.tau - 1e-4))
        assert below > 0.1

    def test_grid_membership(self):
        cfg = reference_config()
        result = calibrate_tau(cfg, target_alpha=0.1)
        steps = round((result.tau - 0.5) / 1e-4)
        assert result.tau == pytest.approx(0.5 + steps * 1e-4, abs=1e-12)

    def test_infeasible_raises_with_achieved(self):
        # A prior centred far above the reference with real weight stops
        # almost surely even at the top of the threshold grid.
        cfg = TrialConfig(
            theta01=0.05,
            theta02=0.05,
            tau=0.98,
            max_n1=4,
            max_n2=4,
            prior=PriorElicitation(p1=0.5, p2=0.5, ess=20.0, rho=0.2),
            rule="correlated",
        )
        with pytest.raises(CalibrationInfeasibleError) as exc_info:
            calibrate_tau(cfg, target_alpha=0.01)
        err = exc_info.value
        assert err.target == 0.01
        assert err.achieved_at_max > 0.01
        assert err.tau_max == pytest.approx(0.9999, abs=1e-12)

    def test_target_validation(self):
        cfg = reference_config(max_n1=4, max_n2=4)
        for bad in (0.0, 1.0, -0.5):
            with pytest.raises(DomainError):
                calibrate_tau(cfg, target_alpha=bad)

    def test_type_I_error_uses_reference_theta(self):
        cfg = reference_config(max_n1=8, max_n2=8)
        direct = exact_oc(cfg, TrueToxicity(0.2, 0.2)).stop_prob1
        assert type_I_error(cfg) == pytest.approx(direct, abs=1e-14)
        other = exact_oc(cfg, TrueToxicity(0.2, 0.35)).stop_prob1
        assert type_I_error(cfg, theta2=0.35) == pytest.approx(other, abs=1e-14)


class TestTrueToxicity:
    def test_domain(self):
        TrueToxicity(0.0, 1.0)
        with pytest.raises(DomainError):
            TrueToxicity(-0.1, 0.5)
        with pytest.raises(DomainError):
            TrueToxicity(0.5, 1.1)
