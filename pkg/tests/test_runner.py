import csv
import json
from unittest.mock import patch

import numpy as np
import pytest

from robust_capacity.config import Config, SolverConfig
from robust_capacity.exceptions import (
    ConvergenceError, EXIT_CONFIG_ERROR, EXIT_OK, EXIT_SOLVER_FAILURE, ScenarioError,
    UnknownGeneratorError
)
from robust_capacity.runner import (
    PointResult, build_point_model, resolve_seed, run_point, run_scenario, run_sweep
)
from robust_capacity.scenario import Scenario

FAST_SOLVER = {"epsilon": 1e-4, "max_iters": 3000, "gap_check_every": 10}


def _read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


@pytest.fixture
def bsc_scenario_dict():
    """Unswept BSC interval scenario"""
    return {
        "name": "bsc",
        "generator": {"kind": "bsc_interval", "params": {"beta_lo": 0.15, "beta_hi": 0.45}},
        "solver": FAST_SOLVER,
    }


@pytest.fixture
def power4_scenario_dict():
    """Small gamma sweep over one power-4 instance"""
    return {
        "name": "power4",
        "generator": {"kind": "random_power4", "params": {"N": 6, "M": 5, "S": 2}, "seed": 7},
        "sweep": {"param": "gamma", "values": [0.0, 0.5, 1.0]},
        "solver": {"max_iters": 100, "gap_check_every": 50},
        "parallelism": 1,
    }


@pytest.mark.unit
def test_build_point_model_inline_gamma(bsc_model_dict):
    """Test that inline models are rescaled by the sweep value"""
    scenario = Scenario.model_validate({"model": bsc_model_dict, "sweep": {"param": "gamma", "values": [0.5]}})

    U = build_point_model(scenario, 0, 0.5)
    assert U.set.scale == 0.5
    assert U.tau == pytest.approx(0.225)

    assert build_point_model(scenario, 0, None).set.scale == 1.0


@pytest.mark.unit
def test_build_point_model_generator_sweep():
    """Test that the sweep value replaces the generator parameter"""
    scenario = Scenario.model_validate({
        "generator": {"kind": "neighbor_ring", "params": {"N": 10}},
        "sweep": {"param": "W", "values": [0, 4]},
    })
    U = build_point_model(scenario, 1, 4)

    assert U.nominal.n_inputs == 10
    assert U.directions[0, 3, 3] == pytest.approx(0.07)
    assert U.directions[0, 4, 4] == pytest.approx(-0.07)


@pytest.mark.unit
def test_build_point_model_gamma_sweep_shares_instance(power4_scenario_dict):
    """Test that every point of a gamma sweep scales the same instance"""
    scenario = Scenario.model_validate(power4_scenario_dict)

    first = build_point_model(scenario, 0, 0.0)
    last = build_point_model(scenario, 2, 1.0)

    assert first.nominal == last.nominal
    assert np.array_equal(first.directions, last.directions)
    assert last.set.scale == 1.0


@pytest.mark.unit
def test_build_point_model_errors():
    """Test unknown generators, unsweepable parameters and invalid values"""
    unknown = Scenario.model_validate({"generator": {"kind": "ring"}})
    with pytest.raises(UnknownGeneratorError):
        build_point_model(unknown, 0, None)

    not_sweepable = Scenario.model_validate({
        "generator": {"kind": "bsc_interval", "params": {"beta_lo": 0.1, "beta_hi": 0.2}},
        "sweep": {"param": "W", "values": [1]},
    })
    with pytest.raises(ScenarioError) as exc_info:
        build_point_model(not_sweepable, 0, 1)
    assert exc_info.value.details["location"] == "sweep.param"

    invalid = Scenario.model_validate({"generator": {"kind": "neighbor_ring", "params": {"N": 3}}})
    with pytest.raises(ScenarioError) as exc_info:
        build_point_model(invalid, 0, None)
    assert exc_info.value.details["location"] == "generator.params.N"


@pytest.mark.unit
def test_resolve_seed_precedence():
    """Test command line over scenario file over solver configuration"""
    cfg = SolverConfig(seed=11)
    unseeded = Scenario.model_validate({"generator": {"kind": "bsc_interval"}})
    seeded = Scenario.model_validate({"generator": {"kind": "bsc_interval", "seed": 5}})

    assert resolve_seed(unseeded, cfg).seed == 11
    assert resolve_seed(seeded, cfg).seed == 5
    assert resolve_seed(seeded, cfg, override=9).seed == 9
    assert seeded.seed == 5


@pytest.mark.unit
def test_run_point(bsc_scenario_dict):
    """Test one point: robust capacity, nominal capacity and the CSV row"""
    scenario = Scenario.model_validate(bsc_scenario_dict)
    cfg = SolverConfig(**FAST_SOLVER)

    result = run_point(scenario, cfg, 0, None)

    assert isinstance(result, PointResult)
    assert result.report.robust_capacity == pytest.approx(0.005008, abs=1e-4)
    assert result.nominal_capacity == pytest.approx(0.082283, abs=1e-6)
    row = result.row()
    assert row["sweep_param"] is None
    assert row["gap"] == result.report.gap_trace[-1][1]
    assert row["constrained_capacity_nats"] is None


@pytest.mark.unit
def test_run_point_with_cost(bsc_scenario_dict):
    """Test the constrained solve after the unconstrained one"""
    bsc_scenario_dict["cost"] = {"a": [0.0, 0.5], "b": 1.0}
    scenario = Scenario.model_validate(bsc_scenario_dict)

    result = run_point(scenario, SolverConfig(**FAST_SOLVER), 0, None)

    assert result.cost == {"a": [0.0, 0.5], "b": 1.0}
    assert result.cost_report is not None
    assert result.row()["constrained_capacity_nats"] == pytest.approx(0.005008, abs=1e-4)


@pytest.mark.asyncio
async def test_run_sweep_keeps_order(power4_scenario_dict):
    """Test that sweep results come back in sweep order"""
    scenario = Scenario.model_validate(power4_scenario_dict)
    cfg = SolverConfig(**power4_scenario_dict["solver"])

    results = await run_sweep(scenario, cfg, parallelism=1)

    assert [r.index for r in results] == [0, 1, 2]
    assert [r.sweep_value for r in results] == [0.0, 0.5, 1.0]
    assert all(r.seed == 7 for r in results)


@pytest.mark.asyncio
async def test_run_sweep_propagates_failure(power4_scenario_dict):
    """Test that a failing point aborts the sweep"""
    scenario = Scenario.model_validate(power4_scenario_dict)

    with patch("robust_capacity.runner.solve", side_effect=ConvergenceError("mirror-prox", 1, "stuck")):
        with pytest.raises(ConvergenceError):
            await run_sweep(scenario, SolverConfig(), parallelism=1)


@pytest.mark.unit
def test_run_scenario_artifacts(write_json, tmp_path, bsc_scenario_dict):
    """Test the CSV and per-point JSON artifacts"""
    path = write_json("bsc.json", bsc_scenario_dict)
    out = tmp_path / "out"

    assert run_scenario(path, Config(), out_dir=out) == EXIT_OK

    rows = _read_csv(out / "bsc.csv")
    assert len(rows) == 1
    assert float(rows[0]["robust_capacity_nats"]) == pytest.approx(0.005008, abs=1e-4)
    assert rows[0]["seed"] == "0"
    assert rows[0]["sweep_param"] == ""

    report = json.loads((out / "bsc_000.json").read_text())
    assert report["index"] == 0
    assert report["report"]["ergodic"]["p"] == pytest.approx([0.5, 0.5], abs=1e-6)


@pytest.mark.unit
def test_run_scenario_bits(write_json, tmp_path, bsc_scenario_dict):
    """Test the bits variant of the CSV"""
    path = write_json("bsc.json", bsc_scenario_dict)

    assert run_scenario(path, Config(), out_dir=tmp_path, bits=True) == EXIT_OK

    rows = _read_csv(tmp_path / "bsc.csv")
    assert "robust_capacity_bits" in rows[0]
    assert "robust_capacity_nats" not in rows[0]
    assert float(rows[0]["nominal_capacity_bits"]) == pytest.approx(0.082283 / np.log(2), abs=1e-6)


@pytest.mark.unit
def test_run_scenario_solver_overrides(write_json, tmp_path, bsc_scenario_dict):
    """Test that command-line settings win over the scenario's solver block"""
    path = write_json("bsc.json", bsc_scenario_dict)

    assert run_scenario(path, Config(), {"max_iters": 5, "epsilon": None}, tmp_path) == EXIT_OK

    rows = _read_csv(tmp_path / "bsc.csv")
    assert int(rows[0]["iterations"]) <= 5


@pytest.mark.unit
def test_run_scenario_is_reproducible(write_json, tmp_path, power4_scenario_dict):
    """Test that identical runs give identical CSV files apart from wall_ms"""
    path = write_json("power4.json", power4_scenario_dict)

    assert run_scenario(path, Config(), out_dir=tmp_path / "a") == EXIT_OK
    assert run_scenario(path, Config(), out_dir=tmp_path / "b") == EXIT_OK

    first = _read_csv(tmp_path / "a" / "power4.csv")
    second = _read_csv(tmp_path / "b" / "power4.csv")
    for row in first + second:
        row.pop("wall_ms")
    assert first == second
    assert [row["seed"] for row in first] == ["7", "7", "7"]


@pytest.mark.unit
def test_run_scenario_seed_override(write_json, tmp_path, power4_scenario_dict):
    """Test that an explicit seed replaces the scenario's"""
    path = write_json("power4.json", power4_scenario_dict)

    assert run_scenario(path, Config(), out_dir=tmp_path, seed=21) == EXIT_OK
    assert {row["seed"] for row in _read_csv(tmp_path / "power4.csv")} == {"21"}


@pytest.mark.unit
def test_run_scenario_config_errors(write_json, tmp_path):
    """Test exit code 2 for scenario and configuration problems"""
    assert run_scenario(tmp_path / "missing.json", Config()) == EXIT_CONFIG_ERROR

    unknown = write_json("unknown.json", {"generator": {"kind": "ring"}})
    assert run_scenario(unknown, Config(), out_dir=tmp_path) == EXIT_CONFIG_ERROR

    bad_solver = write_json("bad_solver.json", {
        "generator": {"kind": "bsc_interval", "params": {"beta_lo": 0.1, "beta_hi": 0.2}},
        "solver": {"epsilon": -1.0},
    })
    assert run_scenario(bad_solver, Config(), out_dir=tmp_path) == EXIT_CONFIG_ERROR

    unknown_setting = write_json("unknown_setting.json", {
        "generator": {"kind": "bsc_interval", "params": {"beta_lo": 0.1, "beta_hi": 0.2}},
        "solver": {"stepsize": 1.0},
    })
    assert run_scenario(unknown_setting, Config(), out_dir=tmp_path) == EXIT_CONFIG_ERROR


@pytest.mark.unit
def test_run_scenario_solver_failure(write_json, tmp_path, bsc_scenario_dict):
    """Test exit code 3 when the solver fails"""
    path = write_json("bsc.json", bsc_scenario_dict)

    with patch("robust_capacity.runner.solve", side_effect=ConvergenceError("mirror-prox", 1, "stuck")):
        assert run_scenario(path, Config(), out_dir=tmp_path) == EXIT_SOLVER_FAILURE

    assert not (tmp_path / "bsc.csv").exists()


@pytest.mark.slow
@pytest.mark.integration
def test_gamma_sweep_is_monotone(write_json, tmp_path, power4_scenario_dict):
    """Test that a larger uncertainty scale never raises the robust capacity"""
    power4_scenario_dict["sweep"]["values"] = [0.0, 0.25, 0.5, 0.75, 1.0]
    power4_scenario_dict["solver"] = {"epsilon": 1e-3}
    power4_scenario_dict["parallelism"] = 2
    path = write_json("power4.json", power4_scenario_dict)

    assert run_scenario(path, Config(), out_dir=tmp_path) == EXIT_OK

    rows = _read_csv(tmp_path / "power4.csv")
    values = np.array([float(r["robust_capacity_nats"]) for r in rows])
    assert np.all(np.diff(values) <= 2e-3)
    assert values[0] == pytest.approx(float(rows[0]["nominal_capacity_nats"]), abs=1e-3)
    for row in rows:
        assert float(row["robust_capacity_nats"]) <= float(row["upper_bound"]) + 1e-9


@pytest.mark.slow
@pytest.mark.integration
def test_neighbor_ring_sweep_is_symmetric(write_json, tmp_path):
    """Test the W sweep: symmetric about N/2 and equal to nominal at the midpoint"""
    scenario = {
        "name": "ring",
        "generator": {"kind": "neighbor_ring", "params": {"N": 50}},
        "sweep": {"param": "W", "values": [0, 25, 50]},
        "solver": {"epsilon": 5e-3},
    }
    path = write_json("ring.json", scenario)

    assert run_scenario(path, Config(), out_dir=tmp_path) == EXIT_OK

    rows = _read_csv(tmp_path / "ring.csv")
    robust = [float(r["robust_capacity_nats"]) for r in rows]
    nominal = float(rows[1]["nominal_capacity_nats"])

    assert robust[0] == pytest.approx(robust[2], abs=2 * 5e-3)
    assert robust[1] == pytest.approx(nominal, abs=2 * 5e-3)
    assert robust[0] < robust[1]
    for row in (rows[0], rows[2]):
        loss = 1.0 - float(row["robust_capacity_nats"]) / float(row["nominal_capacity_nats"])
        assert 0.05 <= loss <= 0.09


@pytest.mark.slow
@pytest.mark.integration
def test_gamma_sweep_cost_column_below_unconstrained(write_json, tmp_path):
    """Test that the threshold-cost column never exceeds the unconstrained one"""
    scenario = {
        "name": "power4_cost",
        "generator": {"kind": "random_power4", "params": {"N": 12, "M": 4, "S": 2}, "seed": 3},
        "cost": {},
        "sweep": {"param": "gamma", "values": [0.0, 0.5, 1.0]},
        "solver": {"epsilon": 1e-3},
        "parallelism": 1,
    }
    path = write_json("power4_cost.json", scenario)

    assert run_scenario(path, Config(), out_dir=tmp_path) == EXIT_OK

    rows = _read_csv(tmp_path / "power4_cost.csv")
    assert len(rows) == 3
    for row in rows:
        constrained = float(row["constrained_capacity_nats"])
        assert constrained <= float(row["robust_capacity_nats"]) + 1e-3
        assert float(row["lambda_star"]) >= 0.0
