"""
Robust capacity under an average input cost constraint a'p <= b.

The constraint is dualised with a multiplier lam in [0, Lambda]; the saddle
problem becomes min over (xi, lam), max over p of
I(p, Q(xi)) + lam * (b - a'p), solved by the same prox-method.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from .channel import ChannelMatrix, _grad_p
from .config import SolverConfig
from .exceptions import CostModelError, DimensionMismatchError
from .oracles import _blahut_arimoto
from .prox import Geometry, SaddlePoint
from .solver import (
    GapEstimate,
    MirrorProx,
    RobustCapacityObjective,
    SolverReport,
    StepBounds,
    Termination,
    lipschitz_bounds,
    minimize_over_set,
)
from .uncertainty import UncertaintyModel, _assemble, _grad_xi
from .utils.validation import as_float_array, validate_positive

logger = logging.getLogger(__name__)

# relative bump so that [0, Lambda] contains the optimal multiplier
LAMBDA_BUMP = 1e-9
LAMBDA_EDGE_TOL = 1e-9

COST_THRESHOLD = 0.05
COST_PENALTY = 50.0
COST_BUDGET = 1.0


@dataclass(frozen=True, eq=False)
class CostConstraint:
    """Cost vector a >= 0 over the inputs and budget b > 0."""
    a: np.ndarray
    b: float

    def __post_init__(self):
        a = as_float_array(self.a, "a", ndim=1)
        if np.any(a < 0):
            raise CostModelError("costs must be nonnegative", a=a.tolist())
        b = validate_positive(self.b, "b")
        if a.min() >= b:
            raise CostModelError("budget must exceed the cheapest input cost",
                                 min_cost=float(a.min()), b=b)
        if a.max() <= b:
            logger.warning(f"Cost constraint is slack: max cost {a.max():g} <= budget {b:g}")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def size(self) -> int:
        return self.a.size

    def slack(self, p: np.ndarray) -> float:
        """b - a'p; negative when p violates the budget."""
        return float(self.b - self.a @ p)

    def to_dict(self) -> Dict[str, Any]:
        return {"a": self.a.tolist(), "b": self.b}


def threshold_cost(p_bar: np.ndarray, threshold: float = COST_THRESHOLD,
                   penalty: float = COST_PENALTY, b: float = COST_BUDGET) -> CostConstraint:
    """Charge `penalty` for every input whose unconstrained optimal probability reaches `threshold`."""
    a = np.where(np.asarray(p_bar) >= threshold, penalty, 0.0)
    logger.debug(f"Threshold cost: {int((a > 0).sum())} of {a.size} inputs penalised")
    return CostConstraint(a, b)


def lambda_cap(c: CostConstraint, N: int) -> float:
    """
    Bound on the optimal multiplier: log N / (b - min_n a_n).

    Raises:
        DimensionMismatchError: If the cost vector does not have N entries
    """
    if c.size != N:
        raise DimensionMismatchError("a", (N,), (c.size,))
    return float(np.log(N) / (c.b - c.a.min()))


def g_of_lambda(lam: float, Q: ChannelMatrix, c: CostConstraint, tol: float = 1e-8) -> float:
    """
    g(lam) = max over p of I(p, Q) + lam * (b - a'p).

    The linear term enters Blahut-Arimoto as a tilt of the input weights.
    """
    lam = validate_positive(lam, "lambda", allow_zero=True)
    if c.size != Q.n_inputs:
        raise DimensionMismatchError("a", (Q.n_inputs,), (c.size,))
    result = _blahut_arimoto(Q.entries, lam * c.a, tol)
    return lam * c.b + result.lower


class CostConstrainedObjective(RobustCapacityObjective):
    """phi((xi, lam), p) = I(p, Q(xi)) + lam * (b - a'p)."""

    def __init__(self, U: UncertaintyModel, c: CostConstraint, cfg: SolverConfig):
        super().__init__(U, cfg)
        self.cost = c
        self._Lambda = lambda_cap(c, U.n_inputs) * (1.0 + LAMBDA_BUMP)

    @property
    def Lambda(self) -> float:
        return self._Lambda

    def step_bounds(self) -> StepBounds:
        G = Geometry(self.U.set.kind, 1.0, 1.0, self.cfg.delta, self.Lambda)
        return lipschitz_bounds(self.U, G, self.cost.a, self.Lambda)

    def initial_point(self, start: Optional[SaddlePoint]) -> SaddlePoint:
        z = super().initial_point(start)
        lam = start.lam if start is not None and start.lam is not None else 0.0
        return SaddlePoint(z.xi, z.p, min(max(lam, 0.0), self.Lambda))

    def operator(self, z: SaddlePoint) -> np.ndarray:
        Q = _assemble(self.U, z.xi)
        grad_p = _grad_p(z.p, Q) - z.lam * self.cost.a
        return np.concatenate([_grad_xi(z.xi, z.p, self.U, Q), [self.cost.slack(z.p)], -grad_p])

    def gap(self, z: SaddlePoint) -> GapEstimate:
        cfg = self.cfg
        ba = self.best_response(_assemble(self.U, z.xi), z.lam * self.cost.a)
        upper = z.lam * self.cost.b + ba.upper

        worst_xi, value, certified = minimize_over_set(
            self.U, z.p, z.xi, cfg.lower_leg_iters, cfg.lower_leg_tol)
        slack = self.cost.slack(z.p)
        worst_lam = self.Lambda if slack < 0 else 0.0
        penalty = worst_lam * slack
        return GapEstimate(upper, value + penalty, certified + penalty, worst_xi, ba.p, worst_lam)

    def upper_bound(self, z: SaddlePoint, est: GapEstimate) -> float:
        # g(lam_bar) at Q(xi_bar) bounds the constrained robust capacity
        return est.upper

    def location_error(self, z: SaddlePoint, est: GapEstimate) -> float:
        # the tilted best response in p jumps with lam; only xi is compared
        return float(np.max(np.abs(z.xi - est.worst_xi)))

    def finalize(self, report: SolverReport) -> SolverReport:
        lam = report.lambda_star
        if report.termination is not Termination.GAP_REACHED and lam >= self.Lambda - LAMBDA_EDGE_TOL:
            raise CostModelError(
                "multiplier pinned at its bound without closing the gap",
                lambda_star=lam, Lambda=self.Lambda, gap=report.gap_trace[-1][1],
            )
        return report


def solve_with_cost(U: UncertaintyModel, c: CostConstraint, cfg: Optional[SolverConfig] = None,
                    start: Optional[SaddlePoint] = None) -> SolverReport:
    """
    Cost-constrained robust capacity.

    Returns:
        SolverReport whose robust_capacity is the constrained value and whose
        lambda_star is the ergodic multiplier

    Raises:
        DimensionMismatchError: If the cost vector does not match the inputs
        CostModelError: If the multiplier sits at Lambda without gap closure
    """
    cfg = cfg or SolverConfig()
    cfg.validate()
    objective = CostConstrainedObjective(U, c, cfg)
    logger.info(f"Cost-constrained solve: b={c.b:g}, Lambda={objective.Lambda:.6f}")
    return MirrorProx(objective, cfg).run(start)
