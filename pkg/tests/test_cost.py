import logging

import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from scipy.special import xlogy

from robust_capacity.channel import ChannelMatrix
from robust_capacity.config import SolverConfig
from robust_capacity.cost import (
    CostConstraint, CostConstrainedObjective, g_of_lambda, lambda_cap, solve_with_cost,
    threshold_cost
)
from robust_capacity.exceptions import CostModelError, DimensionMismatchError, ValidationError
from robust_capacity.oracles import blahut_arimoto
from robust_capacity.prox import SaddlePoint


def _binary_entropy(x):
    return -xlogy(x, x) - xlogy(1 - x, 1 - x)


def _bsc_cost_grid(budget_p1, beta_lo, beta_hi):
    """max over P(input 1) <= budget_p1 of min over the crossover interval, on a grid"""
    p1 = np.linspace(0.0, budget_p1, 2501)[:, None]
    beta = np.linspace(beta_lo, beta_hi, 301)[None, :]
    info = _binary_entropy(p1 * (1 - beta) + (1 - p1) * beta) - _binary_entropy(beta)
    return float(info.min(axis=1).max())


@pytest.mark.unit
def test_cost_constraint_validation(caplog):
    """Test cost vector and budget checks"""
    with pytest.raises(CostModelError, match="nonnegative"):
        CostConstraint([-1.0, 2.0], 1.0)

    with pytest.raises(ValidationError):
        CostConstraint([0.0, 2.0], 0.0)

    with pytest.raises(CostModelError, match="cheapest input"):
        CostConstraint([1.0, 2.0], 1.0)

    with caplog.at_level(logging.WARNING):
        CostConstraint([0.0, 0.5], 1.0)
    assert "slack" in caplog.text


@pytest.mark.unit
def test_cost_constraint_slack():
    """Test b - a'p"""
    c = CostConstraint([0.0, 2.0], 1.0)

    assert c.size == 2
    assert c.slack(np.array([0.5, 0.5])) == pytest.approx(0.0)
    assert c.slack(np.array([0.0, 1.0])) == pytest.approx(-1.0)
    assert c.to_dict() == {"a": [0.0, 2.0], "b": 1.0}


@pytest.mark.unit
def test_threshold_cost():
    """Test the penalty on inputs at or above the threshold"""
    c = threshold_cost(np.array([0.5, 0.04, 0.46]))

    assert np.array_equal(c.a, [50.0, 0.0, 50.0])
    assert c.b == 1.0


@pytest.mark.unit
def test_lambda_cap():
    """Test Lambda = log N / (b - min a)"""
    assert lambda_cap(CostConstraint([0.0, 2.0], 1.0), 2) == pytest.approx(0.693147, abs=1e-6)

    a = np.zeros(50)
    a[::2] = 50.0
    assert lambda_cap(CostConstraint(a, 1.0), 50) == pytest.approx(np.log(50))

    # scaling costs and budget together scales the cap inversely
    base = lambda_cap(CostConstraint([0.5, 3.0, 1.0], 2.0), 3)
    scaled = lambda_cap(CostConstraint([1.5, 9.0, 3.0], 6.0), 3)
    assert scaled == pytest.approx(base / 3)

    with pytest.raises(DimensionMismatchError):
        lambda_cap(CostConstraint([0.0, 2.0], 1.0), 3)


@pytest.mark.unit
def test_g_of_lambda_endpoints(random_channel):
    """Test g at lam = 0 and on a channel with equal rows"""
    c = CostConstraint([0.0, 2.0, 3.0], 1.0)
    capacity, _ = blahut_arimoto(random_channel, tol=1e-12)
    assert g_of_lambda(0.0, random_channel, c, tol=1e-12) == pytest.approx(capacity, abs=1e-10)

    same_rows = ChannelMatrix([[0.1, 0.2, 0.3, 0.4]] * 3)
    for lam in (0.0, 0.5, 2.0):
        assert g_of_lambda(lam, same_rows, c, tol=1e-12) == pytest.approx(lam, abs=1e-10)

    with pytest.raises(ValidationError):
        g_of_lambda(-0.1, random_channel, c)

    with pytest.raises(DimensionMismatchError):
        g_of_lambda(0.1, random_channel, CostConstraint([0.0, 2.0], 1.0))


@pytest.mark.unit
def test_g_of_lambda_convex(random_channel):
    """Test convexity of g in the multiplier"""
    c = CostConstraint([0.0, 1.5, 3.0], 1.0)
    lams = np.linspace(0.0, 2 * lambda_cap(c, 3), 21)
    values = np.array([g_of_lambda(lam, random_channel, c) for lam in lams])

    assert np.all(values[:-2] + values[2:] - 2 * values[1:-1] >= -1e-7)


@pytest.mark.unit
def test_g_of_lambda_nondecreasing_beyond_cap(random_channel):
    """Test that the minimiser of g lies inside [0, Lambda]"""
    c = CostConstraint([0.0, 1.5, 3.0], 1.0)
    cap = lambda_cap(c, 3)
    values = [g_of_lambda(k * cap, random_channel, c) for k in (1.0, 1.5, 2.0, 4.0)]

    assert np.all(np.diff(values) >= -1e-7)


@pytest.mark.unit
def test_cost_objective_operator_layout(bsc_model):
    """Test the multiplier entry of the operator is the constraint slack"""
    c = CostConstraint([0.0, 2.0], 1.0)
    objective = CostConstrainedObjective(bsc_model, c, SolverConfig())
    z = objective.initial_point(None)

    assert z.lam == 0.0
    F = objective.operator(SaddlePoint(z.xi, [0.25, 0.75], lam=0.3))
    assert F.shape == (4,)
    assert F[1] == pytest.approx(1.0 - 1.5)
    assert objective.Lambda == pytest.approx(np.log(2), rel=1e-8)


@pytest.mark.unit
def test_solve_with_cost_slack_budget(bsc_model, fast_config):
    """Test that a budget that never binds leaves the robust capacity unchanged"""
    report = solve_with_cost(bsc_model, CostConstraint([0.0, 0.5], 1.0), fast_config)

    assert report.robust_capacity == pytest.approx(0.005008, abs=1e-4)
    assert report.lambda_star is not None
    assert report.lambda_star == pytest.approx(0.0, abs=1e-2)


@pytest.mark.unit
def test_solve_with_cost_dimension_mismatch(bsc_model):
    """Test that the cost vector must cover every input"""
    with pytest.raises(DimensionMismatchError):
        solve_with_cost(bsc_model, CostConstraint([0.0, 0.5, 2.0], 1.0))


@pytest.mark.slow
def test_solve_with_cost_matches_dual(zero_uncertainty_model, random_channel):
    """Test a binding budget against min over lam of g on a known channel"""
    c = CostConstraint([0.0, 2.0, 2.0], 1.0)
    cfg = SolverConfig(epsilon=1e-4)

    report = solve_with_cost(zero_uncertainty_model, c, cfg)
    reference = minimize_scalar(lambda lam: g_of_lambda(lam, random_channel, c),
                                bounds=(0.0, lambda_cap(c, 3)), method="bounded").fun
    unconstrained, _ = blahut_arimoto(random_channel)

    assert report.robust_capacity == pytest.approx(reference, abs=1e-3)
    assert report.robust_capacity <= unconstrained + 1e-4
    assert 0.0 <= report.lambda_star <= lambda_cap(c, 3) * (1 + 1e-9)


@pytest.mark.unit
def test_solve_with_cost_bsc_matches_grid(bsc_model):
    """Test a binding budget on the BSC interval against a grid over inputs and crossovers"""
    c = CostConstraint([0.0, 2.0], 0.5)
    report = solve_with_cost(bsc_model, c, SolverConfig(epsilon=5e-5))
    reference = _bsc_cost_grid(0.25, 0.15, 0.45)

    assert reference == pytest.approx(0.0037576, abs=1e-6)
    assert report.robust_capacity == pytest.approx(reference, abs=1e-4)
    assert report.robust_capacity < 0.005008
    assert report.ergodic.p[1] == pytest.approx(0.25, abs=1e-2)
    assert 0.0 <= report.lambda_star <= lambda_cap(c, 2) * (1 + 1e-9)
