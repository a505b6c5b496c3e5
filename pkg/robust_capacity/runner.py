"""
Scenario execution: model construction per sweep point, the solver runs,
and the CSV / JSON artifacts.
"""

import asyncio
import logging
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ValidationError as PydanticValidationError

from .config import Config, SolverConfig, get_config
from .cost import CostConstraint, solve_with_cost, threshold_cost
from .exceptions import (
    EXIT_OK,
    ScenarioError,
    UnknownGeneratorError,
    create_user_friendly_error,
    exit_code_for,
)
from .generators import GeneratorRegistry, point_rng
from .oracles import blahut_arimoto
from .prox import SaddlePoint
from .scenario import Scenario, build_inline_model, load_scenario
from .solver import SolverReport, solve
from .uncertainty import UncertaintyModel
from .utils.reporting import write_csv, write_json

logger = logging.getLogger(__name__)

SweepValue = Optional[Union[int, float]]


class PointResult(BaseModel):
    """Everything produced for one sweep point."""
    index: int
    sweep_value: SweepValue = None
    seed: int
    nominal_capacity: float
    wall_ms: float
    report: SolverReport
    cost_report: Optional[SolverReport] = None
    cost: Optional[Dict[str, Any]] = None

    def row(self) -> Dict[str, Any]:
        final_gap = self.report.gap_trace[-1][1] if self.report.gap_trace else self.report.best_gap
        return {
            "sweep_param": self.sweep_value,
            "robust_capacity_nats": self.report.robust_capacity,
            "nominal_capacity_nats": self.nominal_capacity,
            "upper_bound": self.report.upper_bound,
            "gap": final_gap,
            "iterations": self.report.iterations,
            "wall_ms": round(self.wall_ms, 3),
            "seed": self.seed,
            "certified_gap": self.report.certified_gap,
            "constrained_capacity_nats": self.cost_report.robust_capacity if self.cost_report else None,
            "lambda_star": self.cost_report.lambda_star if self.cost_report else None,
        }


def build_point_model(scenario: Scenario, index: int, value: SweepValue,
                      path: str = "<scenario>",
                      registry: Optional[GeneratorRegistry] = None) -> UncertaintyModel:
    """
    Uncertainty model of one sweep point.

    Generated models draw from the stream keyed by (seed, index); a sweep
    over the scale gamma reuses the stream of index 0 so that every point
    scales the same instance.
    """
    if scenario.model is not None:
        U = build_inline_model(path, scenario.model)
        return U if value is None else U.with_scale(float(value))

    spec = scenario.generator
    registry = registry or GeneratorRegistry()
    generator = registry.get_generator(spec.kind)
    if generator is None:
        raise UnknownGeneratorError(spec.kind, registry.get_supported_kinds())

    params = dict(spec.params)
    if value is not None:
        if scenario.sweep.param not in generator.sweepable:
            raise ScenarioError(path, f"generator '{spec.kind}' has no parameter '{scenario.sweep.param}'",
                                "sweep.param")
        params[scenario.sweep.param] = value
    try:
        parsed = generator.parse(params)
    except PydanticValidationError as e:
        first = e.errors()[0]
        location = ".".join(["generator", "params"] + [str(p) for p in first.get("loc", ())])
        raise ScenarioError(path, first.get("msg", "invalid value"), location) from e

    stream = 0 if scenario.sweep is not None and scenario.sweep.param == "gamma" else index
    return generator.build(parsed, point_rng(scenario.seed, stream))


def resolve_seed(scenario: Scenario, cfg: SolverConfig, override: Optional[int] = None) -> Scenario:
    """Pin the generator seed: command line, then scenario file, then solver configuration."""
    if scenario.generator is None:
        return scenario
    seed = override if override is not None else scenario.generator.seed
    if seed is None:
        seed = cfg.seed
    return scenario.model_copy(update={"generator": scenario.generator.model_copy(update={"seed": seed})})


def _start_point(scenario: Scenario) -> Optional[SaddlePoint]:
    if scenario.start is None:
        return None
    return SaddlePoint(np.array(scenario.start.xi), np.array(scenario.start.p), scenario.start.lam)


def run_point(scenario: Scenario, cfg: SolverConfig, index: int, value: SweepValue,
              path: str = "<scenario>") -> PointResult:
    """Solve one sweep point: unconstrained, then constrained if a cost is configured."""
    started = time.perf_counter()
    U = build_point_model(scenario, index, value, path)
    start = _start_point(scenario)

    report = solve(U, cfg, start)
    nominal, _ = blahut_arimoto(U.nominal, cfg.ba_tol, cfg.ba_max_iter)

    cost_report = None
    cost = None
    if scenario.cost is not None:
        spec = scenario.cost
        if spec.a is not None:
            cost = CostConstraint(np.array(spec.a), spec.b)
        else:
            cost = threshold_cost(np.array(report.ergodic.p), spec.threshold, spec.penalty, spec.b)
        cost_report = solve_with_cost(U, cost, cfg, start)

    wall_ms = (time.perf_counter() - started) * 1000.0
    logger.info(f"Point {index} ({value}): robust capacity {report.robust_capacity:.6f} nats "
                f"in {wall_ms:.0f} ms")
    return PointResult(
        index=index,
        sweep_value=value,
        seed=scenario.seed,
        nominal_capacity=nominal,
        wall_ms=wall_ms,
        report=report,
        cost_report=cost_report,
        cost=cost.to_dict() if cost is not None else None,
    )


async def run_sweep(scenario: Scenario, cfg: SolverConfig, parallelism: int = 1,
                    path: str = "<scenario>") -> List[PointResult]:
    """
    Run every sweep point in a bounded worker pool.

    Points are submitted in batches of `parallelism`; results come back in
    sweep order. The first failing point aborts the sweep after its batch.
    """
    loop = asyncio.get_running_loop()
    points = list(enumerate(scenario.points))
    results: List[PointResult] = []

    pool = ProcessPoolExecutor(max_workers=parallelism) if parallelism > 1 else ThreadPoolExecutor(max_workers=1)
    with pool as executor:
        for i in range(0, len(points), parallelism):
            batch = points[i:i + parallelism]
            batch_results = await asyncio.gather(
                *[loop.run_in_executor(executor, run_point, scenario, cfg, index, value, path)
                  for index, value in batch],
                return_exceptions=True
            )

            for result in batch_results:
                if isinstance(result, BaseException):
                    raise result
                results.append(result)

    return results


def write_artifacts(scenario: Scenario, results: List[PointResult], out_dir: Path,
                    bits: bool = False) -> Path:
    """CSV of all points plus one JSON report per point; returns the CSV path."""
    name = scenario.output.name or scenario.name
    for result in results:
        write_json(out_dir / f"{name}_{result.index:03d}.json", result)
    return write_csv(out_dir / f"{name}.csv", [r.row() for r in results], bits)


def run_scenario(path: Union[str, Path], config: Optional[Config] = None,
                 solver_overrides: Optional[Dict[str, Any]] = None,
                 out_dir: Optional[Union[str, Path]] = None,
                 bits: Optional[bool] = None, seed: Optional[int] = None) -> int:
    """
    Execute a scenario file and write its artifacts.

    Solver settings are layered: configuration, then the scenario's solver
    block, then `solver_overrides` (command-line flags). `seed` overrides
    the generator seed.

    Returns:
        0 on success, 2 on configuration or scenario errors, 3 on solver failure
    """
    path = str(path)
    try:
        config = config or get_config()
        scenario = load_scenario(path)
        cfg = config.solver.replace(**scenario.solver).replace(**(solver_overrides or {}))
        cfg.validate()
        scenario = resolve_seed(scenario, cfg, seed)

        parallelism = scenario.parallelism or config.run.parallelism
        parallelism = max(1, min(parallelism, len(scenario.points)))
        logger.info(f"Running scenario '{scenario.name}': {len(scenario.points)} point(s), "
                    f"parallelism {parallelism}")

        results = asyncio.run(run_sweep(scenario, cfg, parallelism, path))

        target = Path(out_dir or scenario.output.dir or config.run.output_dir)
        use_bits = config.run.bits if bits is None else bits
        csv_path = write_artifacts(scenario, results, target, use_bits)
        logger.info(f"Scenario '{scenario.name}' finished; results in {csv_path}")
        return EXIT_OK
    except Exception as e:
        logger.error(create_user_friendly_error(e))
        logger.debug("Scenario failure", exc_info=True)
        return exit_code_for(e)
