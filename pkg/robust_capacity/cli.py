"""
Command-line front end.

    rcc solve model.json          robust capacity of one model or unswept scenario
    rcc sweep scenario.json       run a scenario file, CSV + JSON artifacts
    rcc bsc --lo 0.15 --hi 0.45   closed form for a BSC interval
    rcc kl --q 0.2,0.3,0.5 --rho 0.05
    rcc bounds model.json         step constants and a priori bounds
    rcc ba channel.json           Blahut-Arimoto capacity of a known channel

Exit codes: 0 success, 2 configuration or input error, 3 solver failure.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from .config import Config, set_config
from .exceptions import EXIT_CONFIG_ERROR, EXIT_OK, ScenarioError, create_user_friendly_error, exit_code_for
from .oracles import (
    BscInterval,
    KlRow,
    blahut_arimoto,
    bsc_robust_capacity,
    kl_symmetric_dual,
    upper_bound_weakly_symmetric,
)
from .runner import resolve_seed, run_point, run_scenario
from .scenario import load_channel, load_model, load_problem
from .solver import RobustCapacityObjective
from .utils.reporting import nats_to_bits, write_json
from .utils.validation import as_float_array

logger = logging.getLogger(__name__)

# keys of single-run payloads that carry an amount of information
_INFORMATION_KEYS = ("capacity", "robust_capacity", "upper_bound", "nominal_capacity",
                     "weakly_symmetric_bound", "best_gap", "certified_gap")


def configure_logging(level: str = "info") -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epsilon", type=float, help="target duality gap in nats")
    parser.add_argument("--max-iters", type=int, dest="max_iters", help="outer iteration cap")
    parser.add_argument("--seed", type=int, help="generator seed")


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--bits", action="store_true", default=None, help="report information in bits")
    parser.add_argument("--out", help="output file (solve) or directory (sweep)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcc",
        description="Robust capacity of discrete memoryless channels under law uncertainty",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve_cmd = sub.add_parser("solve", help="solve one uncertainty model or unswept scenario")
    solve_cmd.add_argument("model", help="model or scenario JSON file")
    _add_solver_flags(solve_cmd)
    _add_output_flags(solve_cmd)

    sweep_cmd = sub.add_parser("sweep", help="run a scenario file")
    sweep_cmd.add_argument("scenario", help="scenario JSON file")
    _add_solver_flags(sweep_cmd)
    _add_output_flags(sweep_cmd)

    bsc_cmd = sub.add_parser("bsc", help="robust capacity of a BSC with an interval crossover")
    bsc_cmd.add_argument("--lo", type=float, required=True)
    bsc_cmd.add_argument("--hi", type=float, required=True)
    _add_output_flags(bsc_cmd)

    kl_cmd = sub.add_parser("kl", help="weakly symmetric channel with a KL ball around its rows")
    kl_cmd.add_argument("--q", type=_float_list, required=True, help="reference row, comma-separated")
    kl_cmd.add_argument("--rho", type=float, required=True)
    _add_output_flags(kl_cmd)

    bounds_cmd = sub.add_parser("bounds", help="step-size constants and a priori bounds of a model")
    bounds_cmd.add_argument("model", help="model JSON file")
    _add_output_flags(bounds_cmd)

    ba_cmd = sub.add_parser("ba", help="capacity of a known channel")
    ba_cmd.add_argument("channel", help="channel JSON file")
    _add_output_flags(ba_cmd)

    return parser


def _solver_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {"epsilon": args.epsilon, "max_iters": args.max_iters, "seed": args.seed}


def _to_bits(payload: Dict[str, Any]) -> Dict[str, Any]:
    converted = {}
    for key, value in payload.items():
        if isinstance(value, dict):
            value = _to_bits(value)
        elif key in _INFORMATION_KEYS and value is not None:
            value = nats_to_bits(value)
        converted[key] = value
    return converted


def _emit(payload: Dict[str, Any], bits: bool, out: Optional[str] = None) -> None:
    if bits:
        payload = dict(_to_bits(payload), unit="bits")
    else:
        payload = dict(payload, unit="nats")
    if out:
        write_json(out, payload)
    else:
        print(json.dumps(payload, indent=2))


def _cmd_solve(args: argparse.Namespace, config: Config) -> int:
    scenario = load_problem(args.model)
    if len(scenario.points) > 1:
        raise ScenarioError(args.model, "solve runs a single point; use 'rcc sweep' for sweeps", "sweep")
    cfg = config.solver.replace(**scenario.solver).replace(**_solver_overrides(args))
    cfg.validate()
    scenario = resolve_seed(scenario, cfg, args.seed)

    result = run_point(scenario, cfg, 0, scenario.points[0], args.model)
    payload = result.report.model_dump(mode="json")
    payload["nominal_capacity"] = result.nominal_capacity
    if result.cost_report is not None:
        payload["cost"] = result.cost
        payload["constrained"] = result.cost_report.model_dump(mode="json")
    _emit(payload, _bits(args, config), args.out)
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace, config: Config) -> int:
    return run_scenario(args.scenario, config, _solver_overrides(args), args.out,
                        args.bits, args.seed)


def _cmd_bsc(args: argparse.Namespace, config: Config) -> int:
    interval = BscInterval(args.lo, args.hi)
    payload = {
        "beta_lo": interval.beta_lo,
        "beta_hi": interval.beta_hi,
        "worst_beta": interval.worst_beta,
        "robust_capacity": bsc_robust_capacity(interval),
    }
    _emit(payload, _bits(args, config), args.out)
    return EXIT_OK


def _cmd_kl(args: argparse.Namespace, config: Config) -> int:
    row = KlRow(as_float_array(args.q, "q", ndim=1), args.rho)
    value, lam = kl_symmetric_dual(row)
    payload = {"rho": row.rho, "robust_capacity": value, "lambda": lam}
    _emit(payload, _bits(args, config), args.out)
    return EXIT_OK


def _cmd_bounds(args: argparse.Namespace, config: Config) -> int:
    U = load_model(args.model)
    bounds = RobustCapacityObjective(U, config.solver).step_bounds()
    nominal, _ = blahut_arimoto(U.nominal, config.solver.ba_tol, config.solver.ba_max_iter)
    payload = dict(bounds.to_dict())
    payload["nominal_capacity"] = nominal
    payload["weakly_symmetric_bound"] = upper_bound_weakly_symmetric(U.nominal)
    _emit(payload, _bits(args, config), args.out)
    return EXIT_OK


def _cmd_ba(args: argparse.Namespace, config: Config) -> int:
    capacity, p = blahut_arimoto(load_channel(args.channel), config.solver.ba_tol,
                                 config.solver.ba_max_iter)
    payload = {"capacity": capacity, "p": p.probs.tolist()}
    _emit(payload, _bits(args, config), args.out)
    return EXIT_OK


def _bits(args: argparse.Namespace, config: Config) -> bool:
    return config.run.bits if args.bits is None else args.bits


COMMANDS = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "bsc": _cmd_bsc,
    "kl": _cmd_kl,
    "bounds": _cmd_bounds,
    "ba": _cmd_ba,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = Config()
        config.validate()
    except (ValueError, TypeError) as e:
        configure_logging()
        logger.error(create_user_friendly_error(e))
        return EXIT_CONFIG_ERROR

    configure_logging(config.run.log_level)
    set_config(config)

    try:
        return COMMANDS[args.command](args, config)
    except Exception as e:
        logger.error(create_user_friendly_error(e))
        logger.debug("Command failed", exc_info=True)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
