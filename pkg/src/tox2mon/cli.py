"""Command line interface.

Subcommands map one-to-one onto the package's public operations:

* ``elicit``          prior component parameters from interpretable targets
* ``boundary-table``  stopping boundary grid for a symmetric schedule
* ``decide``          replay an enrollment log and print the current verdicts
* ``oc``              exact operating characteristics over a toxicity grid
* ``calibrate``       smallest tau meeting a type I error target
* ``simulate``        Monte Carlo operating characteristics
* ``serve``           run the HTTP service

Configuration comes from built-in defaults (the canonical two-cohort
setup: p1 = p2 = 0.2, ESS = 3, rho = 0.5, theta0 = 0.2, tau = 0.98,
20 patients per cohort, correlated rule), optionally overlaid by a JSON
config file (--config) and then by individual flags.  Exit codes: 0 on
success, 1 for computation-level failures (infeasible correlation,
calibration that cannot reach its target, resource caps), 2 for usage and
validation problems.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import Sequence

import jsonschema

from . import __version__
from .bivariate_beta import (
    AlphaVector,
    PriorElicitation,
    correlation,
    elicit,
    feasible_rho_range,
    marginal_params,
)
from .errors import (
    DomainError,
    InfeasibleCorrelationError,
    StateError,
    Tox2MonError,
)
from .monitoring import (
    RULES,
    TrialConfig,
    boundary_table,
    decide,
    parse_event_log,
    replay_events,
)
from .oc import (
    MAX_EXACT_N,
    TrueToxicity,
    calibrate_tau,
    exact_oc,
    mc_simulate,
    oc_grid,
)

_LOG = logging.getLogger("tox2mon")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

_DEFAULTS = {
    "theta01": 0.2,
    "theta02": 0.2,
    "tau": 0.98,
    "maxN1": 20,
    "maxN2": 20,
    "rule": "correlated",
    "prior": {"p1": 0.2, "p2": 0.2, "ess": 3.0, "rho": 0.5},
}

_PRIOR_ELICITATION_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["p1", "p2", "ess", "rho"],
    "properties": {
        "p1": {"type": "number"},
        "p2": {"type": "number"},
        "ess": {"type": "number"},
        "rho": {"type": "number"},
    },
}

_PRIOR_ALPHA_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["a11", "a10", "a01", "a00"],
    "properties": {
        "a11": {"type": "number"},
        "a10": {"type": "number"},
        "a01": {"type": "number"},
        "a00": {"type": "number"},
    },
}

_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "theta01": {"type": "number"},
        "theta02": {"type": "number"},
        "tau": {"type": "number"},
        "maxN1": {"type": "integer"},
        "maxN2": {"type": "integer"},
        "rule": {"enum": list(RULES)},
        "prior": {"oneOf": [_PRIOR_ELICITATION_SCHEMA, _PRIOR_ALPHA_SCHEMA]},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "theta1": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "theta2": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            },
        },
        "format": {"enum": ["table", "csv", "json"]},
    },
}

OC_CSV_COLUMNS = (
    "rule",
    "theta1",
    "theta2",
    "ess",
    "rho",
    "tau",
    "stopProb1",
    "stopProb2",
    "expEnrolled1",
    "expEnrolled2",
    "expEventsTotal",
    "expEventsEarlyStop1",
    "expEventsEarlyStop2",
)

# Figure-data grids: 2 sweeps the prior effective sample size at the null
# toxicity rate; 3, 4 and 5 share a true-toxicity grid and differ only in
# which columns of the emitted table they plot.
_FIGURE_THETA_GRID = (0.1, 0.2, 0.3, 0.4)
_FIGURE_ESS_GRID = tuple(float(v) for v in range(1, 11))


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    """Canonical CSV token: shortest round-tripping float repr, or 'none'."""
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_oc_csv(rows: Sequence[dict]) -> str:
    lines = [",".join(OC_CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in OC_CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def parse_oc_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split(",") != list(OC_CSV_COLUMNS):
        raise DomainError("malformed OC CSV header")
    rows = []
    for ln in lines[1:]:
        toks = ln.split(",")
        if len(toks) != len(OC_CSV_COLUMNS):
            raise DomainError("ragged OC CSV row")
        row: dict = {}
        for col, tok in zip(OC_CSV_COLUMNS, toks):
            if col == "rule":
                row[col] = tok
            elif tok == "none":
                row[col] = None
            else:
                row[col] = float(tok)
        rows.append(row)
    return rows


def _init_logging() -> None:
    raw = os.environ.get("TOX2_LOG_LEVEL", "warn").lower()
    level = _LOG_LEVELS.get(raw)
    if level is None:
        level = logging.WARNING
        logging.basicConfig(level=level, stream=sys.stderr)
        _LOG.warning(
            "unknown TOX2_LOG_LEVEL %r; expected one of %s",
            raw, sorted(_LOG_LEVELS),
        )
    else:
        logging.basicConfig(level=level, stream=sys.stderr)


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise DomainError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DomainError(f"config file {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, _CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise DomainError(
            f"config file {path} violates the configuration schema: {exc.message}"
        ) from exc
    return raw


def _build_config(args) -> tuple[TrialConfig, dict]:
    """Merge defaults, config file, and flags into a TrialConfig.

    Returns the config plus the raw merged dict (which may carry a sweep
    and an output format preference).
    """
    merged = json.loads(json.dumps(_DEFAULTS))
    if getattr(args, "config", None):
        merged.update(_load_config_file(args.config))
    prior_flags = {
        name: getattr(args, name)
        for name in ("p1", "p2", "ess", "rho")
        if getattr(args, name, None) is not None
    }
    if prior_flags:
        base = (
            dict(merged["prior"])
            if "p1" in merged["prior"]
            else dict(_DEFAULTS["prior"])
        )
        base.update(prior_flags)
        merged["prior"] = base
    for flag, key in (
        ("theta01", "theta01"),
        ("theta02", "theta02"),
        ("tau", "tau"),
        ("rule", "rule"),
    ):
        v = getattr(args, flag, None)
        if v is not None:
            merged[key] = v
    if getattr(args, "max_n", None) is not None:
        merged["maxN1"] = args.max_n
        merged["maxN2"] = args.max_n
    cfg = TrialConfig.from_json(
        {k: merged[k] for k in ("theta01", "theta02", "tau", "maxN1", "maxN2", "prior", "rule")}
    )
    return cfg, merged


def _resolve_format(args, merged: dict) -> str:
    if getattr(args, "format", None):
        return args.format
    return merged.get("format", "table")


def _prior_summary(cfg: TrialConfig) -> tuple[float, float]:
    """(ess, rho) of the configured prior, for report columns."""
    alpha = cfg.alpha()
    return alpha.ess, correlation(alpha)


def _cmd_elicit(args) -> int:
    prior = PriorElicitation(
        p1=args.p1 if args.p1 is not None else _DEFAULTS["prior"]["p1"],
        p2=args.p2 if args.p2 is not None else _DEFAULTS["prior"]["p2"],
        ess=args.ess if args.ess is not None else _DEFAULTS["prior"]["ess"],
        rho=args.rho if args.rho is not None else _DEFAULTS["prior"]["rho"],
    )
    alpha = elicit(prior)
    (m1a, m1b), (m2a, m2b) = marginal_params(alpha)
    lo, hi = feasible_rho_range(prior.p1, prior.p2)
    payload = {
        "alpha": alpha.to_json(),
        "ess": alpha.ess,
        "correlation": correlation(alpha),
        "marginal1": {"a": m1a, "b": m1b},
        "marginal2": {"a": m2a, "b": m2b},
        "feasibleRho": {"lo": lo, "hi": hi},
    }
    fmt = args.format or "table"
    if fmt == "json":
        sys.stdout.write(canonical_json(payload))
    elif fmt == "csv":
        cols = ("a11", "a10", "a01", "a00", "ess", "correlation")
        vals = (alpha.a11, alpha.a10, alpha.a01, alpha.a00, alpha.ess,
                payload["correlation"])
        sys.stdout.write(",".join(cols) + "\n")
        sys.stdout.write(",".join(_fmt(v) for v in vals) + "\n")
    else:
        sys.stdout.write(
            f"alpha11 = {alpha.a11:.6g}\n"
            f"alpha10 = {alpha.a10:.6g}\n"
            f"alpha01 = {alpha.a01:.6g}\n"
            f"alpha00 = {alpha.a00:.6g}\n"
            f"ess     = {alpha.ess:.6g}\n"
            f"corr    = {payload['correlation']:.6g}\n"
            f"marginal 1: Beta({m1a:.6g}, {m1b:.6g})\n"
            f"marginal 2: Beta({m2a:.6g}, {m2b:.6g})\n"
            f"feasible rho: [{lo:.6g}, {hi:.6g}]\n"
        )
    return 0


def _cmd_boundary_table(args) -> int:
    cfg, merged = _build_config(args)
    table = boundary_table(cfg, args.n_max)
    fmt = _resolve_format(args, merged)
    if fmt == "json":
        sys.stdout.write(canonical_json(table.to_json()))
    elif fmt == "csv":
        sys.stdout.write(table.to_csv())
    else:
        sys.stdout.write(table.to_text())
    return 0


def _cmd_decide(args) -> int:
    cfg, merged = _build_config(args)
    try:
        with open(args.log, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise DomainError(f"cannot read event log {args.log}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DomainError(f"event log {args.log} is not valid JSON: {exc}") from exc
    events = parse_event_log(raw)
    state = replay_events(cfg, events)
    d1, d2 = decide(cfg, state)
    fmt = _resolve_format(args, merged)
    if fmt == "json":
        payload = {
            "state": state.to_json(),
            "decisions": [d1.to_json(), d2.to_json()],
        }
        sys.stdout.write(canonical_json(payload))
    elif fmt == "csv":
        sys.stdout.write("cohort,status,n,k,exceedance,stop\n")
        for d in (d1, d2):
            sys.stdout.write(
                f"{d.cohort},{d.status},{d.n},{d.k},{_fmt(d.exceedance)},"
                f"{str(d.stop).lower()}\n"
            )
    else:
        for d in (d1, d2):
            verdict = "STOP" if d.stop else "continue"
            sys.stdout.write(
                f"cohort {d.cohort}: {d.status}, n={d.n}, k={d.k}, "
                f"P(theta > theta0 | data) = {d.exceedance:.6f} -> {verdict}\n"
            )
    return 0


def _parse_theta_list(text: str) -> list[float]:
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise DomainError(f"malformed theta list {text!r}") from exc
    if not vals:
        raise DomainError(f"empty theta list {text!r}")
    return vals


def _oc_rows(cfg: TrialConfig, theta1s, theta2s) -> list[dict]:
    ess, rho = _prior_summary(cfg)
    rows = []
    for truth, res in oc_grid(cfg, list(theta1s), list(theta2s)):
        rows.append({
            "rule": cfg.rule,
            "theta1": truth.theta1,
            "theta2": truth.theta2,
            "ess": ess,
            "rho": rho,
            "tau": cfg.tau,
            "stopProb1": res.stop_prob1,
            "stopProb2": res.stop_prob2,
            "expEnrolled1": res.expected_enrolled1,
            "expEnrolled2": res.expected_enrolled2,
            "expEventsTotal": res.expected_events_total,
            "expEventsEarlyStop1": res.expected_events_at_stop1,
            "expEventsEarlyStop2": res.expected_events_at_stop2,
        })
    return rows


def _figure_rows(cfg: TrialConfig, figure: int, calibrate_alpha: float | None) -> list[dict]:
    """Data grids behind the report figures.

    Figure 2 sweeps the prior effective sample size with cohort 1 held at
    its reference rate; figures 3-5 share one true-toxicity grid (they
    plot different columns of the same table).  All three rules are
    included so the curves can be compared.
    """
    rows: list[dict] = []
    base_prior = cfg.prior
    if figure == 2 and not isinstance(base_prior, PriorElicitation):
        raise DomainError(
            "--figure 2 sweeps the effective sample size and needs an "
            "elicitation-form prior (p1, p2, ess, rho)"
        )
    for rule in RULES:
        if figure == 2:
            for ess in _FIGURE_ESS_GRID:
                prior = replace(base_prior, ess=ess)
                sub = replace(cfg, rule=rule, prior=prior)
                if calibrate_alpha is not None:
                    sub = replace(sub, tau=calibrate_tau(sub, calibrate_alpha).tau)
                rows.extend(
                    _oc_rows(sub, [sub.theta01], _FIGURE_THETA_GRID)
                )
        else:
            sub = replace(cfg, rule=rule)
            if calibrate_alpha is not None:
                sub = replace(sub, tau=calibrate_tau(sub, calibrate_alpha).tau)
            rows.extend(
                _oc_rows(sub, _FIGURE_THETA_GRID, _FIGURE_THETA_GRID)
            )
    return rows


def _cmd_oc(args) -> int:
    cfg, merged = _build_config(args)
    if args.figure is not None:
        rows = _figure_rows(cfg, args.figure, args.calibrate_alpha)
    else:
        sweep = merged.get("sweep", {})
        theta1s = (
            _parse_theta_list(args.theta1)
            if args.theta1 is not None
            else sweep.get("theta1")
        )
        theta2s = (
            _parse_theta_list(args.theta2)
            if args.theta2 is not None
            else sweep.get("theta2")
        )
        if not theta1s or not theta2s:
            raise DomainError(
                "oc needs --theta1 and --theta2 lists (or a config sweep, "
                "or --figure)"
            )
        sub = cfg
        if args.calibrate_alpha is not None:
            sub = replace(cfg, tau=calibrate_tau(cfg, args.calibrate_alpha).tau)
        rows = _oc_rows(sub, theta1s, theta2s)
    fmt = _resolve_format(args, merged)
    if fmt == "json":
        sys.stdout.write(canonical_json({"results": rows}))
    elif fmt == "csv":
        sys.stdout.write(emit_oc_csv(rows))
    else:
        header = "  ".join(f"{c:>20}" for c in OC_CSV_COLUMNS)
        sys.stdout.write(header + "\n")
        for row in rows:
            sys.stdout.write(
                "  ".join(f"{_fmt(row[c]):>20}" for c in OC_CSV_COLUMNS) + "\n"
            )
    return 0


def _cmd_calibrate(args) -> int:
    cfg, merged = _build_config(args)
    result = calibrate_tau(cfg, args.target_alpha, args.theta2)
    fmt = _resolve_format(args, merged)
    if fmt == "json":
        sys.stdout.write(canonical_json(result.to_json()))
    else:
        sys.stdout.write(
            f"tau = {result.tau:.4f}\n"
            f"achieved type I error = {result.achieved_alpha:.6f}\n"
            f"target = {result.target_alpha:.6f}\n"
        )
    return 0


def _cmd_simulate(args) -> int:
    cfg, merged = _build_config(args)
    truth = TrueToxicity(args.theta1, args.theta2)
    result = mc_simulate(cfg, truth, args.reps, args.seed)
    fmt = _resolve_format(args, merged)
    if fmt == "json":
        sys.stdout.write(canonical_json(result.to_json()))
    else:
        est = result.estimate.to_json()
        se = result.stderr.to_json()
        sys.stdout.write(f"reps = {result.reps}, seed = {result.seed}\n")
        for key in est:
            e = "undefined" if est[key] is None else f"{est[key]:.6f}"
            s = "" if se[key] is None else f" (se {se[key]:.6f})"
            sys.stdout.write(f"{key:>28} = {e}{s}\n")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    bind = args.bind or os.environ.get("TOX2_BIND", "127.0.0.1:8000")
    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise DomainError(f"--bind must look like HOST:PORT, got {bind!r}")
    app = create_app(cors_origins=args.cors_origin)
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
    return 0


def _add_trial_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON configuration file")
    sub.add_argument("--p1", type=float, help="prior mean toxicity, cohort 1")
    sub.add_argument("--p2", type=float, help="prior mean toxicity, cohort 2")
    sub.add_argument("--ess", type=float, help="prior effective sample size")
    sub.add_argument("--rho", type=float, help="prior correlation")
    sub.add_argument("--theta01", type=float, help="reference toxicity rate, cohort 1")
    sub.add_argument("--theta02", type=float, help="reference toxicity rate, cohort 2")
    sub.add_argument("--tau", type=float, help="posterior probability threshold")
    sub.add_argument("--max-n", type=int, help="maximum patients per cohort")
    sub.add_argument("--rule", choices=list(RULES), help="monitoring rule")


def _add_format_flag(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--format", choices=["table", "csv", "json"],
                     help="output format (default table)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tox2mon",
        description=(
            "Bayesian toxicity monitoring for two-cohort trials with a "
            "correlated bivariate beta prior"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("elicit", help="derive prior component parameters")
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--ess", type=float)
    p.add_argument("--rho", type=float)
    _add_format_flag(p)
    p.set_defaults(handler=_cmd_elicit)

    p = subs.add_parser("boundary-table", help="stopping boundary grid")
    _add_trial_flags(p)
    p.add_argument("--n-max", type=int, default=10,
                   help="largest per-cohort sample size in the table")
    _add_format_flag(p)
    p.set_defaults(handler=_cmd_boundary_table)

    p = subs.add_parser("decide", help="replay an event log and print verdicts")
    _add_trial_flags(p)
    p.add_argument("--log", required=True, help="JSON enrollment event log")
    _add_format_flag(p)
    p.set_defaults(handler=_cmd_decide)

    p = subs.add_parser("oc", help="exact operating characteristics")
    _add_trial_flags(p)
    p.add_argument("--theta1", help="comma-separated true rates, cohort 1")
    p.add_argument("--theta2", help="comma-separated true rates, cohort 2")
    p.add_argument("--figure", type=int, choices=[2, 3, 4, 5],
                   help="emit the data grid behind a report figure")
    p.add_argument("--calibrate-alpha", type=float,
                   help="recalibrate tau per rule to this type I error first")
    _add_format_flag(p)
    p.set_defaults(handler=_cmd_oc)

    p = subs.add_parser("calibrate", help="calibrate tau to a type I error target")
    _add_trial_flags(p)
    p.add_argument("--target-alpha", type=float, required=True)
    p.add_argument("--theta2", type=float,
                   help="assumed true cohort-2 rate (default theta02)")
    _add_format_flag(p)
    p.set_defaults(handler=_cmd_calibrate)

    p = subs.add_parser("simulate", help="Monte Carlo operating characteristics")
    _add_trial_flags(p)
    p.add_argument("--theta1", type=float, required=True)
    p.add_argument("--theta2", type=float, required=True)
    p.add_argument("--reps", type=int, default=10000)
    p.add_argument("--seed", type=int, default=20260814)
    _add_format_flag(p)
    p.set_defaults(handler=_cmd_simulate)

    p = subs.add_parser("serve", help="run the HTTP service")
    p.add_argument("--bind", help="HOST:PORT (default TOX2_BIND or 127.0.0.1:8000)")
    p.add_argument("--cors-origin", action="append",
                   help="allowed CORS origin (repeatable; default *)")
    p.set_defaults(handler=_cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    _init_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except InfeasibleCorrelationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, StateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Tox2MonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
