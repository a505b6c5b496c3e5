"""
Reference solutions and certificates for robust capacity.

Closed forms (binary symmetric interval, weakly symmetric rows under a KL
ball), upper-bound certificates, and Blahut-Arimoto for the capacity of a
single known channel.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp, rel_entr, xlogy

from .channel import ChannelMatrix, InputDistribution
from .exceptions import ConvergenceError, ValidationError
from .utils.validation import (
    as_float_array,
    validate_positive,
    validate_shape,
    validate_simplex_point,
    validate_unit_interval,
)

logger = logging.getLogger(__name__)

BA_TOL = 1e-8
BA_MAX_ITER = 100000
WARM_START_MIX = 1e-9
KL_LAMBDA_LIMIT = 1e8


class CapacityBounds(NamedTuple):
    """Result of a (tilted) Blahut-Arimoto run: lower <= optimum <= upper."""
    lower: float
    upper: float
    p: np.ndarray
    iterations: int


def _blahut_arimoto(Q: np.ndarray, tilt: Optional[np.ndarray] = None, tol: float = BA_TOL,
                    max_iter: int = BA_MAX_ITER, strict: bool = True,
                    p0: Optional[np.ndarray] = None) -> CapacityBounds:
    """
    Maximise I(p, Q) - <tilt, p> over the simplex.

    With d_n = D(Q_n || q) - tilt_n at the current p, <p, d> is the objective
    value and max_n d_n bounds the optimum from above. With strict=False the
    last bracket is returned instead of raising at the iteration cap. A warm
    start p0 is mixed with the uniform distribution so that every input keeps
    positive weight.
    """
    n_inputs = Q.shape[0]
    p = np.full(n_inputs, 1.0 / n_inputs)
    if p0 is not None:
        p = (1.0 - WARM_START_MIX) * np.asarray(p0, dtype=float) + WARM_START_MIX * p
    for iteration in range(1, max_iter + 1):
        q = p @ Q
        d = rel_entr(Q, q[None, :]).sum(axis=1)
        if tilt is not None:
            d = d - tilt
        lower = float(p @ d)
        upper = float(d.max())
        if upper - lower <= tol:
            return CapacityBounds(lower, upper, p, iteration)
        w = p * np.exp(d - upper)
        p = w / w.sum()
    if not strict:
        return CapacityBounds(lower, upper, p, max_iter)
    raise ConvergenceError("Blahut-Arimoto", max_iter, "bound gap above tolerance",
                           lower=lower, upper=upper, tol=tol)


def blahut_arimoto(Q: ChannelMatrix, tol: float = BA_TOL,
                   max_iter: int = BA_MAX_ITER) -> Tuple[float, InputDistribution]:
    """
    Capacity of a known channel, in nats.

    Args:
        Q: Channel law matrix
        tol: Width of the certified bracket around the capacity
        max_iter: Iteration cap

    Returns:
        Tuple of (capacity, capacity-achieving input distribution)

    Raises:
        ConvergenceError: If the bracket does not close within max_iter iterations
    """
    validate_positive(tol, "tol")
    result = _blahut_arimoto(Q.entries, tol=tol, max_iter=max_iter)
    return max(result.lower, 0.0), InputDistribution(result.p)


@dataclass(frozen=True)
class BscInterval:
    """Crossover probability interval of a binary symmetric channel."""
    beta_lo: float
    beta_hi: float

    def __post_init__(self):
        lo = validate_unit_interval(self.beta_lo, "beta_lo")
        hi = validate_unit_interval(self.beta_hi, "beta_hi")
        if lo > hi:
            raise ValidationError("beta_lo", lo, f"must not exceed beta_hi ({hi})")
        if lo > 0.5:
            # beta and 1 - beta give the same channel up to relabelling outputs
            lo, hi = 1.0 - hi, 1.0 - lo
        object.__setattr__(self, "beta_lo", lo)
        object.__setattr__(self, "beta_hi", hi)

    @property
    def worst_beta(self) -> float:
        return min(0.5, self.beta_hi)


def bsc_robust_capacity(interval: BscInterval) -> float:
    """Robust capacity of a BSC whose crossover probability ranges over an interval."""
    beta = interval.worst_beta
    return float(np.log(2.0) + xlogy(beta, beta) + xlogy(1.0 - beta, 1.0 - beta))


@dataclass(frozen=True, eq=False)
class KlRow:
    """Reference row q of a weakly symmetric channel and the radius of its KL ball."""
    q: np.ndarray
    rho: float
    n_inputs: Optional[int] = None

    def __post_init__(self):
        q = validate_simplex_point(self.q, "q", atol=1e-9)
        if q.min() <= 0:
            raise ValidationError("q", self.q, "entries must be strictly positive")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "rho", validate_positive(self.rho, "rho", allow_zero=True))

    @property
    def size(self) -> int:
        return self.q.size


def _kl_dual_objective(lam: float, log_q: np.ndarray, rho: float) -> float:
    # min over r of (1 + lam) sum r log r - lam sum r log q, minus lam * rho
    alpha = lam / (1.0 + lam)
    return float(-(1.0 + lam) * logsumexp(alpha * log_q) - lam * rho)


def kl_symmetric_dual(row: KlRow, tol: float = 1e-10) -> Tuple[float, float]:
    """
    Robust capacity of a weakly symmetric channel whose rows range over a KL ball.

    Solves max over lam >= 0 of log M - (1 + lam) log sum_m q_m^(lam/(1+lam)) - lam*rho.

    Returns:
        Tuple of (value in nats, maximising multiplier); the multiplier is inf
        when rho = 0 and 0 when the uniform row is inside the ball

    Raises:
        ConvergenceError: If the maximiser is not bracketed below 1e8
    """
    log_m = np.log(row.size)
    log_q = np.log(row.q)

    if row.rho == 0:
        return float(log_m + row.q @ log_q), float("inf")

    # uniform row feasible: the worst row has maximal entropy
    if -log_m - float(np.mean(log_q)) <= row.rho:
        return 0.0, 0.0

    def objective(lam: float) -> float:
        return _kl_dual_objective(lam, log_q, row.rho)

    hi = 1.0
    while objective(2.0 * hi) >= objective(hi):
        hi *= 2.0
        if hi > KL_LAMBDA_LIMIT:
            raise ConvergenceError("KL dual bracket", int(np.log2(hi)),
                                   "objective still increasing", lambda_hi=hi)

    result = minimize_scalar(lambda lam: -objective(lam), bounds=(0.0, 2.0 * hi),
                             method="bounded", options={"xatol": tol})
    lam_star = float(result.x)
    value = log_m + objective(lam_star)
    logger.debug(f"KL dual: lambda*={lam_star:.6g}, value={value:.8f}")
    return max(float(value), 0.0), lam_star


def upper_bound_weakly_symmetric(Q: ChannelMatrix) -> float:
    """
    Upper bound on robust capacity from one channel of the uncertainty set.

    log N + max_n sum_m Q_nm log(Q_nm / sum_l Q_lm); tight for weakly
    symmetric channels.
    """
    Q = Q.entries
    col = Q.sum(axis=0)
    return float(np.log(Q.shape[0]) + rel_entr(Q, col[None, :]).sum(axis=1).max())


def dual_certificate(Q: ChannelMatrix, v) -> float:
    """
    Dual objective log sum_m exp(v_m) + max_n sum_m Q_nm (log Q_nm - v_m).

    Any channel Q of the uncertainty set and any finite v give an upper
    bound on the robust capacity.
    """
    v = as_float_array(v, "v", ndim=1)
    validate_shape(v, (Q.n_outputs,), "v")
    E = Q.entries
    rows = (xlogy(E, E) - E * v[None, :]).sum(axis=1)
    return float(logsumexp(v) + rows.max())

