"""HTTP service exposing the monitoring engine to browser clients.

Stateless JSON-over-HTTP: every request carries the full trial
configuration and (where relevant) the current state, so the service keeps
no sessions and horizontal scaling is trivial.  Endpoints live under
/api/v1:

* GET  /health          liveness and version
* POST /decision        per-cohort verdicts plus an all-rules comparison
* POST /whatif          decision grid over hypothetical near-future outcomes
* POST /boundary-table  stopping boundary grid
* POST /oc              exact operating characteristics over a truth grid
* POST /calibrate       threshold calibration to a type I error target

Error contract: 400 for malformed bodies, 413 for requests beyond the
documented resource caps, 422 for well-formed but infeasible inputs (prior
correlation outside its feasible interval, horizons beyond remaining
capacity, unattainable calibration targets), 500 for internal faults.
"""

from __future__ import annotations

import os
from typing import List, Optional, Union

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .bivariate_beta import AlphaVector, PriorElicitation
from .errors import (
    CalibrationInfeasibleError,
    DomainError,
    InfeasibleCorrelationError,
    ResourceLimitError,
    StateError,
    Tox2MonError,
)
from .monitoring import (
    ACTIVE,
    STOPPED_TOXICITY,
    TrialConfig,
    TrialState,
    boundary_k,
    boundary_table,
    decide,
    project_decisions,
)
from .posterior import DataSummary
from .oc import calibrate_tau, oc_grid

# Resource caps for the HTTP surface (tighter than the library's own cap).
MAX_SERVICE_N = 50
MAX_OC_GRID_POINTS = 100

__all__ = ["create_app", "app", "MAX_SERVICE_N", "MAX_OC_GRID_POINTS"]


class ElicitationIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p1: float
    p2: float
    ess: float
    rho: float


class AlphaIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    a11: float
    a10: float
    a01: float
    a00: float


class ConfigIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    theta01: float
    theta02: float
    tau: float
    maxN1: int
    maxN2: int
    prior: Union[ElicitationIn, AlphaIn]
    rule: str

    def to_domain(self) -> TrialConfig:
        if isinstance(self.prior, ElicitationIn):
            prior = PriorElicitation(
                self.prior.p1, self.prior.p2, self.prior.ess, self.prior.rho
            )
        else:
            prior = AlphaVector(
                self.prior.a11, self.prior.a10, self.prior.a01, self.prior.a00
            )
        return TrialConfig(
            theta01=self.theta01,
            theta02=self.theta02,
            tau=self.tau,
            max_n1=self.maxN1,
            max_n2=self.maxN2,
            prior=prior,
            rule=self.rule,
        )


class StateIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    n1: int = Field(ge=0)
    k1: int = Field(ge=0)
    n2: int = Field(ge=0)
    k2: int = Field(ge=0)
    status1: str = ACTIVE
    status2: str = ACTIVE

    def to_domain(self, cfg: TrialConfig) -> TrialState:
        data = DataSummary(self.n1, self.k1, self.n2, self.k2)
        return TrialState(
            data=data,
            max_n1=cfg.max_n1,
            max_n2=cfg.max_n2,
            status1=self.status1,
            status2=self.status2,
            stop1=(self.n1, self.k1) if self.status1 == STOPPED_TOXICITY else None,
            stop2=(self.n2, self.k2) if self.status2 == STOPPED_TOXICITY else None,
        )


class DecisionRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ConfigIn
    state: StateIn


class WhatIfRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ConfigIn
    state: StateIn
    horizon: int = Field(ge=0)


class BoundaryTableRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ConfigIn
    nMax: int = Field(ge=1)


class OCRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ConfigIn
    theta1: List[float] = Field(min_length=1)
    theta2: List[float] = Field(min_length=1)


class CalibrateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: ConfigIn
    targetAlpha: float
    theta2: Optional[float] = None


def _decision_payload(cfg: TrialConfig, state: TrialState, with_boundary: bool) -> list[dict]:
    d1, d2 = decide(cfg, state)
    out = []
    for d in (d1, d2):
        item = d.to_json()
        if with_boundary:
            item["boundaryK"] = boundary_k(cfg, state, d.cohort)
        out.append(item)
    return out


def _error_json(status: int, code: str, message: str, **details) -> JSONResponse:
    body: dict = {"code": code, "message": message}
    if details:
        body["details"] = details
    return JSONResponse(status_code=status, content=body)


def create_app(cors_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(
        title="tox2mon",
        version=__version__,
        description="Bayesian toxicity monitoring for two-cohort trials",
    )

    if cors_origins is None:
        env = os.environ.get("TOX2_CORS_ORIGIN", "")
        cors_origins = [o.strip() for o in env.split(",") if o.strip()] or ["*"]
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def _on_validation(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(p) for p in first.get("loc", ()))
        msg = first.get("msg", "invalid request body")
        return _error_json(400, "bad_request", f"{loc}: {msg}" if loc else msg)

    @app.exception_handler(InfeasibleCorrelationError)
    async def _on_infeasible(request: Request, exc: InfeasibleCorrelationError):
        return _error_json(
            422, "infeasible_prior", str(exc),
            feasibleRho={"lo": exc.lo, "hi": exc.hi},
        )

    @app.exception_handler(CalibrationInfeasibleError)
    async def _on_infeasible_calibration(request: Request, exc: CalibrationInfeasibleError):
        return _error_json(
            422, "infeasible_calibration", str(exc),
            achievedAlphaAtMax=exc.achieved_at_max, tauMax=exc.tau_max,
        )

    @app.exception_handler(ResourceLimitError)
    async def _on_resource(request: Request, exc: ResourceLimitError):
        return _error_json(413, "resource_limit", str(exc))

    @app.exception_handler(DomainError)
    async def _on_domain(request: Request, exc: DomainError):
        return _error_json(400, "bad_request", str(exc))

    @app.exception_handler(StateError)
    async def _on_state(request: Request, exc: StateError):
        return _error_json(400, "bad_request", str(exc))

    @app.exception_handler(Tox2MonError)
    async def _on_internal(request: Request, exc: Tox2MonError):
        return _error_json(500, "internal_error", str(exc))

    @app.get("/api/v1/health")
    async def health() -> dict:
        return {"status": "ok", "service": "tox2mon", "version": __version__}

    @app.post("/api/v1/decision")
    async def decision(req: DecisionRequest) -> dict:
        cfg = req.config.to_domain()
        state = req.state.to_domain(cfg)
        per_cohort = _decision_payload(cfg, state, with_boundary=True)
        comparison = {}
        for rule in ("correlated", "independent", "pooled"):
            rule_cfg = TrialConfig(
                theta01=cfg.theta01,
                theta02=cfg.theta02,
                tau=cfg.tau,
                max_n1=cfg.max_n1,
                max_n2=cfg.max_n2,
                prior=cfg.prior,
                rule=rule,
            )
            comparison[rule] = _decision_payload(rule_cfg, state, with_boundary=True)
        return {"perCohort": per_cohort, "ruleComparison": comparison}

    @app.post("/api/v1/whatif")
    async def whatif(req: WhatIfRequest) -> dict:
        cfg = req.config.to_domain()
        state = req.state.to_domain(cfg)
        try:
            cells = project_decisions(cfg, state, req.horizon)
        except DomainError as exc:
            return _error_json(422, "invalid_horizon", str(exc))
        out = []
        for j1, j2, (d1, d2) in cells:
            out.append({
                "j1": j1,
                "j2": j2,
                "perCohort": [d1.to_json(), d2.to_json()],
            })
        return {"horizon": req.horizon, "cells": out}

    @app.post("/api/v1/boundary-table")
    async def boundary(req: BoundaryTableRequest) -> dict:
        if req.nMax > MAX_SERVICE_N:
            raise ResourceLimitError(
                f"boundary tables over HTTP are capped at nMax={MAX_SERVICE_N}"
            )
        cfg = req.config.to_domain()
        return boundary_table(cfg, req.nMax).to_json()

    @app.post("/api/v1/oc")
    async def oc(req: OCRequest) -> dict:
        cfg = req.config.to_domain()
        if max(cfg.max_n1, cfg.max_n2) > MAX_SERVICE_N:
            raise ResourceLimitError(
                f"operating characteristics over HTTP are capped at "
                f"maxN={MAX_SERVICE_N} per cohort"
            )
        points = len(req.theta1) * len(req.theta2)
        if points > MAX_OC_GRID_POINTS:
            raise ResourceLimitError(
                f"the truth grid is capped at {MAX_OC_GRID_POINTS} points, "
                f"got {points}"
            )
        results = []
        for truth, res in oc_grid(cfg, req.theta1, req.theta2):
            row = {"theta1": truth.theta1, "theta2": truth.theta2}
            row.update(res.to_json())
            results.append(row)
        return {"rule": cfg.rule, "results": results}

    @app.post("/api/v1/calibrate")
    async def calibrate(req: CalibrateRequest) -> dict:
        cfg = req.config.to_domain()
        if max(cfg.max_n1, cfg.max_n2) > MAX_SERVICE_N:
            raise ResourceLimitError(
                f"calibration over HTTP is capped at maxN={MAX_SERVICE_N} per cohort"
            )
        result = calibrate_tau(cfg, req.targetAlpha, req.theta2)
        return result.to_json()

    return app


app = create_app()
