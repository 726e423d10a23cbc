"""
Tariff Game Command Line

Single entry point for the solvers, sweeps, simulation and curve export.
JSON and CSV payloads go to --out or stdout; logs go to stderr. Every output
file is accompanied by <out>.manifest.json.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 reproduction mismatch.
"""

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import pandas as pd
import yaml
from loguru import logger
from pydantic import ValidationError

from src.tariff_game import __version__
from src.tariff_game.demand import MarketModel, load_model
from src.tariff_game.equilibrium import rate_sensitivities, solve_free_trade_rate, solve_rate
from src.tariff_game.errors import ConfigError, SaddleRejected, TariffGameError, describe
from src.tariff_game.gains import evaluate_gains
from src.tariff_game.montecarlo import (
    RNG_ALGORITHM,
    empirical_demands,
    load_scenario,
    sample_commodities,
    scenario_seeded,
)
from src.tariff_game.nash import (
    best_response_iteration,
    foc_residuals,
    second_order_report,
    solve_exponential_family,
    solve_nash,
    solve_symmetric,
)
from src.tariff_game.reproduce import ReproductionEvaluator, format_table
from src.tariff_game.structures import (
    AppConfig,
    EquilibriumTriple,
    Family,
    RootMultiplicity,
    RunManifest,
    SolverConfig,
    TariffPair,
)
from src.tariff_game.sweep import demand_curves, gain_sweep, rate_surface, to_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_MISMATCH = 4

DEFAULT_CONFIG = "config/default.yaml"
LOG_FORMAT = "{time:HH:mm:ss} | {level: <7} | {name}:{function} - {message}"

Payload = Union[Dict[str, Any], pd.DataFrame, str]


def configure_logging(level: str) -> None:
    """Send loguru output to stderr at the given level; stdout stays for payloads."""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=LOG_FORMAT)


def load_config(config_path: str = DEFAULT_CONFIG) -> AppConfig:
    """Load configuration from a YAML (or JSON) file; a missing file means defaults."""
    path = Path(config_path)
    if not path.exists():
        logger.warning(f"Config not found: {config_path}, using defaults")
        return AppConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        return AppConfig.model_validate(data)
    except (OSError, yaml.YAMLError, ValidationError) as e:
        raise ConfigError(f"invalid config {config_path}: {e}") from e


@dataclass
class RunContext:
    args: argparse.Namespace
    config: AppConfig
    model_digest: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def cfg(self) -> SolverConfig:
        return self.config.solver

    @property
    def workers(self) -> int:
        return self.args.workers or self.config.output.workers

    def model(self) -> MarketModel:
        if not self.args.model:
            raise ConfigError("--model is required for this command")
        model = load_model(self.args.model, tol_sym=self.cfg.tol_sym)
        self.model_digest = model.digest()
        return model

    def tariffs(self) -> TariffPair:
        return TariffPair(theta=self.args.theta, theta_star=self.args.theta_star)


@dataclass
class CommandResult:
    payload: Payload
    exit_code: int = EXIT_OK
    default_format: str = "json"


# ==================== Commands ====================

def cmd_solve_rate(ctx: RunContext) -> CommandResult:
    model = ctx.model()
    t = ctx.tariffs()
    sol = solve_rate(model, t, ctx.cfg)
    payload: Dict[str, Any] = {
        "e": sol.rate_e,
        "residual": sol.residual,
        "de_dtheta": None,
        "de_dtheta_star": None,
        "unique": sol.root_multiplicity == RootMultiplicity.UNIQUE,
        "roots": sol.roots,
        "at_boundary": sol.at_boundary,
    }
    try:
        sens = rate_sensitivities(model, sol.rate_e, t)
        payload.update(de_dtheta=sens.de_dtheta, de_dtheta_star=sens.de_dtheta_star)
    except TariffGameError as err:
        logger.warning(f"Sensitivities unavailable: {err}")
        payload["sensitivity_error"] = describe(err)
    return CommandResult(payload)


def cmd_gains(ctx: RunContext) -> CommandResult:
    report = evaluate_gains(ctx.model(), ctx.tariffs(), ctx.args.rate, ctx.cfg)
    return CommandResult(report.model_dump(mode="json"))


def cmd_sweep(ctx: RunContext) -> CommandResult:
    frame = gain_sweep(ctx.model(), ctx.args.grid, ctx.cfg, ctx.workers)
    return CommandResult(frame, default_format="csv")


def _triple_payload(triple: EquilibriumTriple) -> Dict[str, Any]:
    payload = triple.model_dump(mode="json")
    payload["accepted"] = triple.accepted
    return payload


def _exponential_params(model: MarketModel) -> Dict[str, float]:
    if (
        model.demand_domestic.family != Family.EXPONENTIAL
        or model.demand_foreign.family != Family.CLIPPED_EXP_GROWTH
    ):
        raise ConfigError("exp-family needs an exponential D and a clipped_exp_growth D*")
    return {
        "alpha": model.demand_foreign.params["alpha"],
        "beta": model.demand_foreign.params.get("beta", 0.0),
        "delta": model.demand_domestic.params["delta"],
    }


def cmd_nash(ctx: RunContext) -> CommandResult:
    model = ctx.model()
    method = ctx.args.method
    try:
        if method == "newton":
            triple = solve_nash(model if model.is_smooth else model.smoothed(), ctx.cfg)
        elif method == "best-response":
            theta, theta_star = _parse_floats(ctx.args.start, 2, "--start")
            triple = best_response_iteration(
                model, TariffPair(theta=theta, theta_star=theta_star), ctx.cfg
            )
        elif method == "symmetric":
            triple = solve_symmetric(model, ctx.cfg)
        else:
            p = _exponential_params(model)
            triple = solve_exponential_family(
                p["alpha"], p["beta"], p["delta"], ctx.cfg, M=model.M, cross_check=True
            )
    except SaddleRejected as err:
        logger.error(str(err))
        return CommandResult(_triple_payload(err.triple), EXIT_SOLVER)
    return CommandResult(_triple_payload(triple), EXIT_OK if triple.accepted else EXIT_SOLVER)


def cmd_verify(ctx: RunContext) -> CommandResult:
    model = ctx.model()
    e, theta, theta_star = _parse_floats(ctx.args.triple, 3, "--triple")
    t = TariffPair(theta=theta, theta_star=theta_star)
    residuals = foc_residuals(model, e, t)
    payload: Dict[str, Any] = {"residuals": list(residuals), "soc_pass": [False, False]}
    try:
        report = second_order_report(model, e, t, balance_tol=max(ctx.cfg.tol_nash, abs(residuals[0])))
        payload["soc_pass"] = list(report.passed)
        payload["second_order"] = report.model_dump(mode="json")
    except TariffGameError as err:
        payload["second_order_error"] = describe(err)
    payload["accepted"] = max(abs(r) for r in residuals) <= ctx.cfg.tol_nash and all(
        payload["soc_pass"]
    )
    return CommandResult(payload, EXIT_OK if payload["accepted"] else EXIT_SOLVER)


def cmd_simulate(ctx: RunContext) -> CommandResult:
    if not ctx.args.spec:
        raise ConfigError("--spec is required for simulate")
    spec = scenario_seeded(load_scenario(ctx.args.spec), ctx.args.seed)
    model = empirical_demands(sample_commodities(spec))
    ctx.model_digest = model.digest()
    ctx.extra.update(rng_seed=spec.rng_seed, n=spec.n)
    return CommandResult(model.to_spec().model_dump(mode="json"))


def cmd_curves(ctx: RunContext) -> CommandResult:
    model = ctx.model()
    frame = demand_curves(model, ctx.args.x_min, ctx.args.x_max, ctx.args.points)
    try:
        ctx.extra["free_trade_rate"] = solve_free_trade_rate(model, ctx.cfg).rate_e
    except TariffGameError as err:
        ctx.extra["free_trade_rate_error"] = describe(err)
    return CommandResult(frame, default_format="csv")


def cmd_rate_surface(ctx: RunContext) -> CommandResult:
    frame = rate_surface(ctx.model(), ctx.args.grid, ctx.cfg, ctx.workers)
    return CommandResult(frame, default_format="csv")


def cmd_reproduce_paper(ctx: RunContext) -> CommandResult:
    report = ReproductionEvaluator(ctx.cfg).run()
    exit_code = EXIT_OK if report.passed else EXIT_MISMATCH
    if ctx.args.format == "json":
        return CommandResult(report.model_dump(mode="json"), exit_code)
    return CommandResult(format_table(report), exit_code, default_format="text")


# ==================== Output ====================

def _parse_floats(text: Optional[str], count: int, flag: str) -> List[float]:
    try:
        values = [float(v) for v in (text or "").split(",")]
    except ValueError as e:
        raise ConfigError(f"{flag} expects {count} comma-separated numbers, got {text!r}") from e
    if len(values) != count:
        raise ConfigError(f"{flag} expects {count} comma-separated numbers, got {text!r}")
    return values


def _rounded(obj: Any, digits: int) -> Any:
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _rounded(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v, digits) for v in obj]
    return obj


def render(payload: Payload, fmt: str, digits: int) -> str:
    if isinstance(payload, str):
        return payload + "\n"
    if isinstance(payload, pd.DataFrame):
        if fmt == "json":
            records = payload.astype(object).where(payload.notna(), None).to_dict(orient="records")
            return json.dumps(_rounded(records, digits), indent=2) + "\n"
        return to_csv(payload, digits)
    if fmt == "csv":
        return to_csv(pd.json_normalize(payload), digits)
    return json.dumps(_rounded(payload, digits), indent=2) + "\n"


def write_output(ctx: RunContext, result: CommandResult, started: float) -> None:
    fmt = ctx.args.format or result.default_format
    text = render(result.payload, fmt, ctx.config.output.significant_digits)

    manifest = RunManifest(
        command=ctx.args.command,
        model_digest=ctx.model_digest,
        config=ctx.config.solver.model_dump(),
        tool_version=__version__,
        rng_seed=ctx.extra.get("rng_seed", ctx.cfg.rng_seed),
        rng_algorithm=RNG_ALGORITHM,
        wall_time=time.perf_counter() - started,
        created_at=datetime.now(timezone.utc).isoformat(),
        extra=ctx.extra,
    )

    if ctx.args.out:
        out = Path(ctx.args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {out}")
        if ctx.config.output.write_manifest:
            manifest_path = out.with_name(out.name + ".manifest.json")
            manifest_path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    else:
        sys.stdout.write(text)
        logger.info(f"Manifest: {manifest.model_dump_json()}")


# ==================== Parser ====================

COMMANDS: Dict[str, Callable[[RunContext], CommandResult]] = {
    "solve-rate": cmd_solve_rate,
    "gains": cmd_gains,
    "sweep": cmd_sweep,
    "nash": cmd_nash,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "curves": cmd_curves,
    "rate-surface": cmd_rate_surface,
    "reproduce-paper": cmd_reproduce_paper,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", type=str, default=None, help="Model JSON document")
    common.add_argument("--config", type=str, default=DEFAULT_CONFIG,
                        help="Path to configuration file")
    common.add_argument("--out", type=str, default=None, help="Output file (default: stdout)")
    common.add_argument("--seed", type=int, default=None, help="Override the RNG seed")
    common.add_argument("--format", choices=["json", "csv"], default=None, help="Output format")
    common.add_argument("--log-level", type=str, default=None,
                        help="Log level (default from config)")
    common.add_argument("--workers", type=int, default=None, help="Concurrent sweep cells")

    parser = argparse.ArgumentParser(
        prog="tariff-game",
        description="Nash-equilibrium tariffs and exchange rates of a two-nation trade game",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def tariffs(p: argparse.ArgumentParser) -> None:
        p.add_argument("--theta", type=float, required=True, help="Domestic retained fraction")
        p.add_argument("--theta-star", type=float, required=True, help="Foreign retained fraction")

    p = sub.add_parser("solve-rate", parents=[common], help="Equilibrium exchange rate")
    tariffs(p)

    p = sub.add_parser("gains", parents=[common], help="Gains from trade of both nations")
    tariffs(p)
    p.add_argument("--rate", type=float, default=None, help="Exchange rate (default: solved)")

    p = sub.add_parser("sweep", parents=[common], help="Gains over a KxK tariff grid")
    p.add_argument("--grid", type=int, default=11)

    p = sub.add_parser("nash", parents=[common], help="Nash equilibrium")
    p.add_argument("--method", choices=["newton", "best-response", "symmetric", "exp-family"],
                   default="newton")
    p.add_argument("--start", type=str, default="0.9,0.9",
                   help="theta,theta_star start of best-response iteration")

    p = sub.add_parser("verify", parents=[common], help="Residuals and SOC flags at a triple")
    p.add_argument("--triple", type=str, required=True, help="e,theta,theta_star")

    p = sub.add_parser("simulate", parents=[common], help="Empirical model from a scenario")
    p.add_argument("--spec", type=str, default=None, help="Scenario JSON document")

    p = sub.add_parser("curves", parents=[common], help="Demand curves for plotting")
    p.add_argument("--x-min", type=float, default=0.0)
    p.add_argument("--x-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=200)

    p = sub.add_parser("rate-surface", parents=[common], help="Exchange rate over the tariff box")
    p.add_argument("--grid", type=int, default=21)

    sub.add_parser("reproduce-paper", parents=[common], help="Check the worked examples")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or "INFO")
    started = time.perf_counter()

    try:
        config = load_config(args.config)
        if args.log_level is None:
            configure_logging(config.logging.level)
        if args.seed is not None:
            config.solver.rng_seed = args.seed
        ctx = RunContext(args=args, config=config)
        result = COMMANDS[args.command](ctx)
        write_output(ctx, result, started)
        return result.exit_code
    except (ConfigError, ValidationError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except TariffGameError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_SOLVER
    except KeyboardInterrupt:
        logger.info("Stopped by user")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
