"""
Prox-method (mirror-prox) solver for robust capacity.

Solves min over xi in B, max over p in the simplex of I(p, Q(xi)) with
extragradient steps in the geometry of ``prox.Geometry``, ergodic averaging
of the inner iterates, an adaptive step size and a duality-gap stop rule.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .channel import ChannelMatrix, _grad_p
from .config import SolverConfig
from .exceptions import (
    ChannelError,
    ConvergenceError,
    NonFiniteIterateError,
    ProxError,
)
from .oracles import (
    CapacityBounds,
    _blahut_arimoto,
    dual_certificate,
    upper_bound_weakly_symmetric,
)
from .prox import (
    Geometry,
    SaddlePoint,
    bregman_divergence,
    domain_violation,
    euclidean_projection,
    prox_joint,
)
from .uncertainty import SetKind, UncertaintyModel, _assemble, _grad_xi, _phi

logger = logging.getLogger(__name__)

INNER_TEST_TOL = 1e-13
LIPSCHITZ_FLOOR = 1e-12
DOMAIN_TOL = 1e-9
ARMIJO_SLOPE = 1e-4
ARMIJO_SHRINK = 0.5
ARMIJO_MIN_STEP = 1e-12


class Termination(str, Enum):
    GAP_REACHED = "GapReached"
    MAX_ITERS = "MaxIters"
    FIXED_POINT = "FixedPoint"


class IteratePoint(BaseModel):
    xi: List[float]
    p: List[float]
    lam: Optional[float] = None

    @classmethod
    def from_saddle(cls, z: SaddlePoint) -> "IteratePoint":
        return cls(**z.to_dict())

    def to_saddle(self) -> SaddlePoint:
        return SaddlePoint(np.array(self.xi), np.array(self.p), self.lam)


class IterateRecord(IteratePoint):
    iteration: int


class SolverReport(BaseModel):
    """Outcome of one solve, serialisable to JSON."""
    ergodic: IteratePoint
    best_gap: float
    gap_trace: List[Tuple[int, float]] = Field(default_factory=list)
    gamma_trace: List[float] = Field(default_factory=list)
    inner_iter_counts: List[int] = Field(default_factory=list)
    termination: Termination
    robust_capacity: float
    upper_bound: float
    certified_gap: float
    worst_xi: List[float]
    iterations: int
    lambda_star: Optional[float] = None
    lower_leg_heuristic: bool = True
    iterate_trace: List[IterateRecord] = Field(default_factory=list)

    def to_json(self, **kwargs: Any) -> str:
        return self.model_dump_json(**kwargs)


@dataclass(frozen=True, eq=False)
class GapEstimate:
    """
    Duality-gap estimate at a saddle point candidate.

    ``upper`` is max over p of phi(xi_bar, p) (Blahut-Arimoto upper bracket),
    ``lower`` is min over xi of phi(xi, p_bar) (projected gradient, heuristic),
    ``certified_lower`` is the linearisation bound at the computed minimiser.
    """
    upper: float
    lower: float
    certified_lower: float
    worst_xi: np.ndarray
    best_p: np.ndarray
    worst_lam: Optional[float] = None

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    @property
    def best_p_value(self) -> float:
        return self.upper

    @property
    def certified_gap(self) -> float:
        return self.upper - self.certified_lower

    def location_error(self, z: SaddlePoint) -> float:
        """Largest coordinate distance between z and the two best responses."""
        return max(float(np.max(np.abs(z.p - self.best_p))),
                   float(np.max(np.abs(z.xi - self.worst_xi))))

    def __iter__(self):
        # unpacks as (gap, worst_xi, best_p_value)
        return iter((self.gap, self.worst_xi, self.best_p_value))


@dataclass(frozen=True)
class StepBounds:
    """Bregman diameters, strong convexity moduli and Lipschitz bounds of the operator."""
    tau: float
    theta1: float
    theta2: float
    alpha1: float
    alpha2: float
    lipschitz: Tuple[Tuple[float, float], Tuple[float, float]]
    gamma1: float
    gamma2: float
    gamma_max: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tau": self.tau,
            "theta1": self.theta1,
            "theta2": self.theta2,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "L11": self.lipschitz[0][0],
            "L12": self.lipschitz[0][1],
            "L21": self.lipschitz[1][0],
            "L22": self.lipschitz[1][1],
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "gamma_max": self.gamma_max,
        }


def _xi_diameter(kind: SetKind, dim: int, delta: float) -> Tuple[float, float]:
    """(Theta_1, alpha_1) for the xi-block distance-generating function."""
    if kind is SetKind.INF_BALL:
        return 2.0 * dim, 1.0
    if kind is SetKind.TWO_BALL:
        return 2.0, 1.0
    if kind is SetKind.BOX_CAP_TWO_BALL:
        return 1.0, 1.0
    return (1.0 + delta) * np.log(dim * (1.0 + delta) / delta), 1.0 / (1.0 + delta)


def lipschitz_bounds(U: UncertaintyModel, G: Geometry, cost_vector: Optional[np.ndarray] = None,
                     Lambda: Optional[float] = None) -> StepBounds:
    """
    Constants for the fixed-step rule.

    Norms: Euclidean on the xi block (and on (xi, lam) with a cost), l1 on p
    with the l-infinity dual. Entry bounds of the Hessian of I use the
    smallest entry tau of Q(xi) over the set.

    Raises:
        ChannelError: If tau <= 0
    """
    tau = U.tau
    if tau <= 0:
        raise ChannelError("step constants require Q(xi) > 0 over the whole set", tau=tau)

    S, N = U.n_perturbations, U.n_inputs
    delta = G.delta
    stacked = U.scaled_directions.reshape(S, -1)
    spectral = float(np.linalg.norm(stacked, 2))
    column_peaks = np.abs(U.directions).max(axis=1).sum(axis=1)
    log_term = 1.0 / tau - np.log(tau)

    L11 = 2.0 * spectral ** 2 / tau
    L12 = U.set.scale * float(np.linalg.norm(column_peaks)) * log_term
    L22 = 1.0 + log_term

    theta1, alpha1 = _xi_diameter(U.set.kind, S, delta)
    theta2, alpha2 = (1.0 + delta) * np.log(N * (1.0 + delta) / delta), 1.0 / (1.0 + delta)

    if cost_vector is not None:
        if Lambda is None:
            raise ChannelError("a cost vector needs the multiplier bound Lambda")
        theta1 += 0.5 * Lambda ** 2
        L12 = float(np.hypot(L12, np.max(np.abs(cost_vector))))

    L = np.maximum(np.array([[L11, L12], [L12, L22]]), LIPSCHITZ_FLOOR)
    theta = np.array([theta1, theta2])
    alpha = np.array([alpha1, alpha2])
    weighted = L * np.sqrt(np.outer(theta, theta) / np.outer(alpha, alpha))
    total = float(weighted.sum())
    rows = weighted.sum(axis=1)

    return StepBounds(
        tau=tau,
        theta1=float(theta1),
        theta2=float(theta2),
        alpha1=float(alpha1),
        alpha2=float(alpha2),
        lipschitz=((float(L[0, 0]), float(L[0, 1])), (float(L[1, 0]), float(L[1, 1]))),
        gamma1=float(rows[0] / (theta1 * total)),
        gamma2=float(rows[1] / (theta2 * total)),
        gamma_max=float(1.0 / (np.sqrt(2.0) * total)),
    )


def step_constants(U: UncertaintyModel, G: Geometry) -> Tuple[float, float, float]:
    """(gamma1, gamma2, gamma_max) of the fixed-step rule; G supplies delta, U the set kind."""
    b = lipschitz_bounds(U, G)
    return b.gamma1, b.gamma2, b.gamma_max


def minimize_over_set(U: UncertaintyModel, p: np.ndarray, xi0: np.ndarray, iters: int,
                      tol: float) -> Tuple[np.ndarray, float, float]:
    """
    Projected gradient with Armijo backtracking for xi -> I(p, Q(xi)).

    Returns:
        Tuple of (minimiser, value, linearisation lower bound on the minimum)
    """
    kind = U.set.kind
    x = euclidean_projection(xi0, kind)
    f = _phi(x, p, U)
    g = _grad_xi(x, p, U)

    for _ in range(iters):
        step = 1.0
        while True:
            x_new = euclidean_projection(x - step * g, kind)
            f_new = _phi(x_new, p, U)
            if f_new <= f + ARMIJO_SLOPE * float(g @ (x_new - x)) or step < ARMIJO_MIN_STEP:
                break
            step *= ARMIJO_SHRINK
        moved = float(np.linalg.norm(x_new - x))
        if f_new <= f:
            x, f = x_new, f_new
            g = _grad_xi(x, p, U)
        if moved <= tol or step < ARMIJO_MIN_STEP:
            break

    # phi is convex in xi: f + min_B <g, xi - x> lower-bounds the minimum
    certified = f + float(U.set.linear_min(g)) - float(g @ x)
    return x, f, certified


class SaddleObjective(ABC):
    """A convex-concave objective min over the first block, max over p."""

    def __init__(self, U: UncertaintyModel, cfg: SolverConfig):
        self.U = U
        self.cfg = cfg
        self._warm_p: Optional[np.ndarray] = None
        if U.tau < cfg.tau_floor:
            raise ChannelError(
                f"Q(xi) must stay above tau_floor={cfg.tau_floor:g} over the set",
                tau=U.tau,
            )

    @property
    def Lambda(self) -> Optional[float]:
        return None

    @property
    def capacity_ceiling(self) -> float:
        return float(np.log(min(self.U.n_inputs, self.U.n_outputs)))

    @abstractmethod
    def step_bounds(self) -> StepBounds:
        pass

    @abstractmethod
    def initial_point(self, start: Optional[SaddlePoint]) -> SaddlePoint:
        pass

    @abstractmethod
    def operator(self, z: SaddlePoint) -> np.ndarray:
        """Stacked (grad over min blocks, -grad over p)."""
        pass

    @abstractmethod
    def gap(self, z: SaddlePoint) -> GapEstimate:
        pass

    @abstractmethod
    def upper_bound(self, z: SaddlePoint, est: GapEstimate) -> float:
        pass

    def geometry(self, bounds: Optional[StepBounds] = None) -> Geometry:
        b = bounds or self.step_bounds()
        return Geometry(self.U.set.kind, b.gamma1, b.gamma2, self.cfg.delta, self.Lambda)

    def best_response(self, Q: np.ndarray, tilt: Optional[np.ndarray] = None) -> CapacityBounds:
        """Blahut-Arimoto at Q, warm-started from the previous best response."""
        result = _best_response(Q, tilt, self.cfg, self._warm_p)
        self._warm_p = result.p
        return result

    def location_error(self, z: SaddlePoint, est: GapEstimate) -> float:
        return est.location_error(z)

    def finalize(self, report: SolverReport) -> SolverReport:
        return report


class RobustCapacityObjective(SaddleObjective):
    """phi(xi, p) = I(p, Q(xi))."""

    def step_bounds(self) -> StepBounds:
        G = Geometry(self.U.set.kind, 1.0, 1.0, self.cfg.delta)
        return lipschitz_bounds(self.U, G)

    def initial_point(self, start: Optional[SaddlePoint]) -> SaddlePoint:
        if start is not None:
            return SaddlePoint(start.xi, start.p)
        return SaddlePoint(self.U.set.center(), np.full(self.U.n_inputs, 1.0 / self.U.n_inputs))

    def operator(self, z: SaddlePoint) -> np.ndarray:
        Q = _assemble(self.U, z.xi)
        return np.concatenate([_grad_xi(z.xi, z.p, self.U, Q), -_grad_p(z.p, Q)])

    def gap(self, z: SaddlePoint) -> GapEstimate:
        cfg = self.cfg
        Q_bar = _assemble(self.U, z.xi)
        ba = self.best_response(Q_bar)
        worst_xi, lower, certified = minimize_over_set(
            self.U, z.p, z.xi, cfg.lower_leg_iters, cfg.lower_leg_tol)
        return GapEstimate(ba.upper, lower, certified, worst_xi, ba.p)

    def upper_bound(self, z: SaddlePoint, est: GapEstimate) -> float:
        Q_bar = ChannelMatrix(_assemble(self.U, z.xi), atol=1e-10)
        q_star = est.best_p @ Q_bar.entries
        return min(dual_certificate(Q_bar, np.log(q_star)), upper_bound_weakly_symmetric(Q_bar))


def _best_response(Q: np.ndarray, tilt: Optional[np.ndarray], cfg: SolverConfig,
                   p0: Optional[np.ndarray] = None) -> CapacityBounds:
    result = _blahut_arimoto(Q, tilt, cfg.ba_tol, cfg.ba_max_iter, strict=False, p0=p0)
    if result.upper - result.lower > cfg.ba_tol:
        # the upper end of an open bracket is still a valid bound
        logger.warning(f"Best-response oracle stopped at the iteration cap with bracket "
                       f"[{result.lower:.6f}, {result.upper:.6f}]")
    return result


def _check_finite(t: int, z: SaddlePoint, F: np.ndarray) -> None:
    if not np.all(np.isfinite(F)):
        raise NonFiniteIterateError(t, "operator", z.to_dict())


def _check_domain(t: int, z: SaddlePoint, G: Geometry) -> None:
    violation = domain_violation(z, G)
    if violation > DOMAIN_TOL:
        raise ProxError("joint", f"iterate {t} left the domain", violation=violation)


def _initial_gamma(cfg: SolverConfig, bounds: StepBounds) -> float:
    if cfg.fixed_gamma is not None:
        return cfg.fixed_gamma
    if cfg.use_theory_step:
        return bounds.gamma_max
    return cfg.gamma0


class MirrorProx:
    """
    Outer loop of the prox-method.

    Each outer step runs inner prox iterations anchored at z until the
    acceptance test <gamma F(w_prev), w_prev - w> - V_z(w) <= 0 holds, then
    sets w^t = w_prev, z^t = w and averages w^t with weight gamma.
    """

    def __init__(self, objective: SaddleObjective, cfg: SolverConfig):
        self.objective = objective
        self.cfg = cfg
        self.bounds = objective.step_bounds()
        self.G = objective.geometry(self.bounds)

    def _inner(self, z: SaddlePoint, w1: SaddlePoint, gamma: float):
        w_prev, F_prev = z, self._F_z
        w = w1
        for k in range(1, self.cfg.max_inner_iters + 1):
            if k > 1:
                w = prox_joint(z, gamma * F_prev, self.G)
            step = gamma * F_prev
            test = float(step @ (w_prev.stack() - w.stack())) - bregman_divergence(w, z, self.G)
            if test <= INNER_TEST_TOL:
                return w_prev, w, k
            w_prev = w
            F_prev = self.objective.operator(w)
            _check_finite(self._t, w, F_prev)
        return w_prev, w, None

    def run(self, start: Optional[SaddlePoint] = None) -> SolverReport:
        cfg = self.cfg
        objective = self.objective
        debug = logger.isEnabledFor(logging.DEBUG)

        z = objective.initial_point(start)
        gamma = _initial_gamma(cfg, self.bounds)
        weighted_sum = np.zeros_like(z.stack())
        gamma_sum = 0.0
        ergodic = z

        gap_trace: List[Tuple[int, float]] = []
        gamma_trace: List[float] = []
        inner_counts: List[int] = []
        iterate_trace: List[IterateRecord] = []
        termination = Termination.MAX_ITERS
        estimate: Optional[GapEstimate] = None
        estimate_at = -1
        best_gap = np.inf

        logger.info(
            f"Mirror-prox start: kind={self.G.kind.value}, gamma1={self.G.gamma1:.3e}, "
            f"gamma2={self.G.gamma2:.3e}, gamma0={gamma:.3e}, adaptive={cfg.adaptive}"
        )

        t = 0
        while t < cfg.max_iters:
            t += 1
            self._t = t
            F_z = objective.operator(z)
            _check_finite(t, z, F_z)
            self._F_z = F_z

            w1 = prox_joint(z, gamma * F_z, self.G)
            if np.linalg.norm(w1.stack() - z.stack()) <= cfg.fixed_point_tol:
                termination = Termination.FIXED_POINT
                ergodic = z
                logger.info(f"Fixed point reached at iteration {t}")
                break

            w_t, z_next, count = self._inner(z, w1, gamma)
            if count is None:
                if cfg.adaptive:
                    gamma /= cfg.gamma_growth
                    if gamma < cfg.gamma_min:
                        raise ConvergenceError(
                            "mirror-prox inner loop", t,
                            f"acceptance test failed with gamma below {cfg.gamma_min:g}")
                    logger.debug(f"Iteration {t}: inner loop exceeded cap, retrying with gamma={gamma:.3e}")
                    t -= 1
                    continue
                logger.warning(f"Iteration {t}: inner loop hit the cap of {cfg.max_inner_iters} steps")
                count = cfg.max_inner_iters

            gamma_trace.append(gamma)
            inner_counts.append(count)
            weighted_sum += gamma * w_t.stack()
            gamma_sum += gamma
            ergodic = z.from_vector(weighted_sum / gamma_sum)
            z = z_next

            if debug:
                _check_domain(t, z, self.G)
                _check_domain(t, w_t, self.G)
                logger.debug(f"Iteration {t}: gamma={gamma:.3e}, inner={count}")

            if cfg.record_iterates:
                iterate_trace.append(IterateRecord(iteration=t, **z.to_dict()))

            if cfg.adaptive:
                gamma = gamma * cfg.gamma_growth if count <= 2 else gamma / cfg.gamma_growth
                gamma = min(max(gamma, cfg.gamma_min), cfg.gamma_cap)

            if t % cfg.gap_check_every == 0 or t == cfg.max_iters:
                estimate = objective.gap(ergodic)
                estimate_at = t
                gap = max(estimate.gap, 0.0)
                gap_trace.append((t, gap))
                best_gap = min(best_gap, gap)
                logger.info(f"Iteration {t}: gap={gap:.3e}, lower={estimate.lower:.6f}, upper={estimate.upper:.6f}")
                if gap <= cfg.epsilon:
                    offset = objective.location_error(ergodic, estimate)
                    if offset <= cfg.location_tol:
                        termination = Termination.GAP_REACHED
                        break
                    logger.debug(f"Iteration {t}: gap closed but best responses are {offset:.3e} away")

        if estimate is None or estimate_at != t or termination is Termination.FIXED_POINT:
            estimate = objective.gap(ergodic)
            gap = max(estimate.gap, 0.0)
            gap_trace.append((t, gap))
            best_gap = min(best_gap, gap)

        robust = min(max(estimate.lower, 0.0), objective.capacity_ceiling)
        report = SolverReport(
            ergodic=IteratePoint.from_saddle(ergodic),
            best_gap=float(best_gap),
            gap_trace=gap_trace,
            gamma_trace=gamma_trace,
            inner_iter_counts=inner_counts,
            termination=termination,
            robust_capacity=robust,
            upper_bound=max(objective.upper_bound(ergodic, estimate), robust),
            certified_gap=max(estimate.certified_gap, 0.0),
            worst_xi=estimate.worst_xi.tolist(),
            iterations=t,
            lambda_star=ergodic.lam,
            iterate_trace=iterate_trace,
        )
        logger.info(
            f"Mirror-prox finished: {termination.value} after {t} iterations, "
            f"robust capacity {robust:.6f} nats, gap {gap_trace[-1][1]:.3e}"
        )
        return objective.finalize(report)


def solve(U: UncertaintyModel, cfg: Optional[SolverConfig] = None,
          start: Optional[SaddlePoint] = None) -> SolverReport:
    """
    Robust capacity of an uncertainty model.

    Args:
        U: Uncertainty model; Q(xi) must stay above cfg.tau_floor over the set
        cfg: Solver configuration (defaults if omitted)
        start: Optional starting point (xi, p)

    Returns:
        SolverReport with the ergodic iterate, traces and bounds

    Raises:
        ChannelError: If Q(xi) can reach entries below tau_floor
        NonFiniteIterateError: If the operator becomes non-finite
        ConvergenceError: If the inner loop cannot be satisfied
    """
    cfg = cfg or SolverConfig()
    cfg.validate()
    return MirrorProx(RobustCapacityObjective(U, cfg), cfg).run(start)


def gap_estimate(z: SaddlePoint, U: UncertaintyModel,
                 cfg: Optional[SolverConfig] = None) -> GapEstimate:
    """Duality-gap estimate of (xi, p) for the unconstrained problem."""
    cfg = cfg or SolverConfig()
    return RobustCapacityObjective(U, cfg).gap(z)

